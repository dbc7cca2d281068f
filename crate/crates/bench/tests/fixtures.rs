use fracproj_bench::{cantor_square, planar_cantor};

#[test]
fn bench_fixtures_have_expected_sizes() {
    let c = planar_cantor(6);
    assert_eq!((c.len(), c.dim()), (64, 2));
    let sq = cantor_square(4);
    assert_eq!((sq.len(), sq.dim()), (256, 2));
    assert!((sq.total_mass() - 1.0).abs() < 1e-12);
}
