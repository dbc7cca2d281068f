use fracproj::experiments::{
    run_suite, verify_corollary1, verify_theorem2, verify_theorem3, Context, Corollary1Check, ExperimentConfig,
    Expect, Fixture, RunOptions, Status, Theorem2Check, Theorem3Check,
};
use fracproj::{energy, pushforward, FamilyRegistry, DEFAULT_POINT_CAP};

fn ctx(registry: &FamilyRegistry) -> Context<'_> {
    Context {
        seed: 3,
        pass_fraction: 0.9,
        cap: DEFAULT_POINT_CAP,
        registry,
    }
}

fn base(id: &str, fixture: Fixture, n_lambda: usize, expect: Expect) -> fracproj::experiments::CheckBase {
    fracproj::experiments::CheckBase {
        id: id.into(),
        fixture,
        family: "planar".into(),
        n_lambda,
        expect,
    }
}

#[test]
fn theorem2_refuses_without_precondition() {
    let reg = FamilyRegistry::default();
    let check = Theorem2Check {
        base: base("atom", Fixture::Atom { dim: 2 }, 8, Expect::Refused),
        epsilon: 0.01,
        min_length: 0.1,
        min_ratio: 0.85,
    };
    let rec = verify_theorem2(&check, &ctx(&reg)).unwrap();
    assert_eq!(rec.status, Status::Refused);
    assert!(rec.outcome_ok);

    // The same fixture expected to pass is a refused check, not a pass.
    let check = Theorem2Check {
        base: base("atom", Fixture::Atom { dim: 2 }, 8, Expect::Pass),
        ..check
    };
    assert!(!verify_theorem2(&check, &ctx(&reg)).unwrap().outcome_ok);
}

#[test]
fn theorem3_rejects_t_at_kappa_and_keeps_mass_at_t_zero() {
    let reg = FamilyRegistry::default();
    let mut check = Theorem3Check {
        base: base("e", Fixture::Cantor { depth: 6 }, 16, Expect::Pass),
        t_values: vec![0.0, 1.0],
        r_min: 1e-4,
    };
    assert!(verify_theorem3(&check, &ctx(&reg)).is_err());
    check.t_values = vec![0.0, 0.5];
    let rec = verify_theorem3(&check, &ctx(&reg)).unwrap();
    assert_eq!(rec.estimates["t=0/ratio"], 1.0);
    assert_eq!(rec.status, Status::Pass);
}

#[test]
fn corollary1_uniform_segment_density_tends_to_one() {
    // A fine uniform grid on [0,1] pushed forward at λ = 0 is (nearly)
    // Lebesgue on [0,1]; the discrete L² norm is then about Σ h² / h = 1.
    let mu = Fixture::Segment { n: 10_000 }.build(DEFAULT_POINT_CAP).unwrap().embed(2).unwrap();
    let reg = FamilyRegistry::default();
    let planar = reg.get("planar").unwrap();
    let nu = pushforward(planar.as_ref(), &[0.0], &mu).unwrap();
    let h = 0.01;
    let mut bins = vec![0.0; 100];
    for (x, w) in nu.cloud().coords().iter().zip(nu.weights()) {
        bins[((x / h).floor() as usize).min(99)] += w;
    }
    let l2: f64 = bins.iter().map(|m| m * m).sum::<f64>() / h;
    assert!((l2 - 1.0).abs() < 1e-4, "{l2}");

    let check = Corollary1Check {
        base: base("seg", Fixture::Segment { n: 2000 }, 32, Expect::Pass),
        histogram_bin: 0.01,
        regularity_c: 2.0,
    };
    let rec = verify_corollary1(&check, &ctx(&reg)).unwrap();
    assert_eq!(rec.status, Status::Pass, "{rec:?}");
    assert!(rec.estimates["lhs_mean"] >= 1.0);
}

#[test]
fn pushforward_energy_is_reproducible_and_thread_independent() {
    let mu = Fixture::CantorProduct { depth: 5 }.build(DEFAULT_POINT_CAP).unwrap();
    let reg = FamilyRegistry::default();
    let planar = reg.get("planar").unwrap();
    let lambdas = planar.sample_lambda(8, 42);
    let values = |threads: usize| -> Vec<u64> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                lambdas
                    .iter()
                    .map(|l| energy(&pushforward(planar.as_ref(), l, &mu).unwrap(), 0.7, 1e-5).unwrap().to_bits())
                    .collect()
            })
    };
    assert_eq!(values(1), values(4));
}

#[test]
fn seed_changes_report_but_not_structure() {
    let text = r#"
schema_version = 1
seed = 1

[[theorem1]]
id = "cantor"
fixture = { kind = "cantor", depth = 8 }
family = "planar"
n_lambda = 8
scales = [0.1111111111111111, 0.037037037037037035, 0.012345679012345678, 0.00411522633744856, 0.0013717421124828531]
tol = 0.1
"#;
    let reg = FamilyRegistry::default();
    let a = ExperimentConfig::from_toml(text).unwrap();
    let mut b = a.clone();
    b.seed = 2;
    let ra = run_suite(&a, &reg, RunOptions::default()).unwrap();
    let rb = run_suite(&b, &reg, RunOptions::default()).unwrap();
    assert_ne!(ra.checks[0].inputs_digest, rb.checks[0].inputs_digest);
    assert_ne!(ra.checks[0].estimates["mean_estimate"], rb.checks[0].estimates["mean_estimate"]);
    assert_eq!(ra.checks[0].estimates.keys().collect::<Vec<_>>(), rb.checks[0].estimates.keys().collect::<Vec<_>>());
    let timed = run_suite(&a, &reg, RunOptions { timings: true }).unwrap();
    assert!(timed.checks[0].wall_time_ms.is_some());
    assert!(ra.checks[0].wall_time_ms.is_none());
}
