use mssflow::config::RunConfig;
use mssflow::driver::{self, RunOptions, EXIT_BLOW_UP, EXIT_HYPOTHESIS, EXIT_MAX_STEPS, EXIT_OK, EXIT_VIOLATION};

const ANNULUS: &str = include_str!("../../../configs/annulus.toml");

fn cfg(text: &str) -> RunConfig {
    RunConfig::from_toml(text).unwrap()
}

fn ball_with(boundary: &str, extra: &str) -> String {
    format!(
        "mode = \"solve\"\nh = 0.0625\n{extra}\n[domain]\nkind = \"ball\"\ncenter = [0.0, 0.0]\nradius = 1.0\n\n[boundary]\n{boundary}\n"
    )
}

#[test]
fn constant_data_converges_without_stepping() {
    let text = ball_with("family = \"constant\"\nvalue = [0.5, -1.0]", "");
    let report = driver::run(&cfg(&text), &RunOptions::default()).unwrap();
    assert_eq!(report.exit_code, EXIT_OK, "{}", report.summary);
    let run = driver::solve_run(&cfg(&text), false).unwrap();
    assert_eq!(run.flow.unwrap().result.steps, 0);
}

#[test]
fn small_linear_data_on_the_annulus_succeeds() {
    let text = "mode = \"solve\"\nh = 0.03125\n\n[domain]\nkind = \"annulus\"\ncenter = [0.0, 0.0]\ninner = 0.5\nouter = 1.0\n\n\
                [boundary]\nfamily = \"linear\"\noffset = [0.0]\nmatrix = [[0.002, 0.001]]\n";
    let report = driver::run(&cfg(text), &RunOptions::default()).unwrap();
    assert_eq!(report.exit_code, EXIT_OK, "{}", report.summary);
    assert!(report.summary.starts_with("mode=solve outcome=converged residual="));
}

#[test]
fn holomorphic_data_is_steady_but_not_length_decreasing() {
    let text = ball_with("family = \"lawson_osserman\"\nscale = 3.0\nbase = \"winding\"", "");
    let run = driver::solve_run(&cfg(&text), true).unwrap();
    assert_eq!(run.exit_code(), EXIT_VIOLATION);
    let flow = run.flow.unwrap();
    assert_eq!(flow.result.steps, 0);
    assert!(!flow.invariants.clause("length_decreasing").unwrap().pass);
}

#[test]
fn large_lawson_osserman_data_needs_force_and_then_fails() {
    let text = "mode = \"solve\"\nh = 0.2\n\n[domain]\nkind = \"ball\"\ncenter = [0.0, 0.0, 0.0, 0.0]\nradius = 1.0\n\n\
                [boundary]\nfamily = \"lawson_osserman\"\nscale = 3.0\nbase = \"hopf\"\n\n[flow]\nmax_steps = 3000\n";
    let unforced = driver::run(&cfg(text), &RunOptions::default()).unwrap();
    assert_eq!(unforced.exit_code, EXIT_HYPOTHESIS);
    let forced = driver::run(
        &cfg(text),
        &RunOptions {
            force: true,
            out: None,
        },
    )
    .unwrap();
    assert!(
        [EXIT_BLOW_UP, EXIT_MAX_STEPS].contains(&forced.exit_code),
        "exit {}: {}",
        forced.exit_code,
        forced.summary
    );
}

#[test]
fn density_mismatch_exits_with_violation() {
    let text = "mode = \"density_oracle\"\nh = 0.03125\n\n[density]\ncase = \"offset_plane\"\noffset = 0.1\ntolerance = 1e-30\n";
    let report = driver::run(&cfg(text), &RunOptions::default()).unwrap();
    assert_eq!(report.exit_code, EXIT_VIOLATION);
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let mut c = cfg(ANNULUS);
    c.flow.max_steps = 300;
    let run_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| driver::run(&c, &RunOptions::default()).unwrap())
    };
    let (a, b) = (run_with(1), run_with(4));
    for name in ["monitors.csv", "field.dat", "report.txt"] {
        assert_eq!(a.file(name), b.file(name), "{name} differs");
    }
}

#[test]
fn zero_exterior_data_gives_a_zero_asymptotic_gradient() {
    let text = "mode = \"exterior\"\nh = 0.25\n\n[domain]\nkind = \"exterior\"\ncenter = [0.0, 0.0]\ninner = 1.0\ntruncation = 6.0\n\n\
                [boundary]\nfamily = \"constant\"\nvalue = [0.0]\n\n[hypothesis]\nc = 0.5\n\n\
                [exterior]\nradii = [4.5, 6.0]\nprobes = [1.5, 2.5, 3.5]\n";
    let rep = driver::exterior_run(&cfg(text), false).unwrap();
    assert_eq!(rep.exit_code, EXIT_OK);
    assert!(rep.l_estimate.norm() == 0.0);
    assert!(rep.decay.iter().all(|d| d.sup_dev == 0.0));
    // δ₀ depends on ∂E only
    assert!(rep.shells.windows(2).all(|w| w[0].delta0 == w[1].delta0));
}

#[test]
fn invalid_configs_are_rejected() {
    let exterior = |radii: &str, probes: &str| {
        format!(
            "mode = \"exterior\"\nh = 0.25\n\n[domain]\nkind = \"exterior\"\ncenter = [0.0, 0.0]\ninner = 1.0\ntruncation = 6.0\n\n\
             [boundary]\nfamily = \"constant\"\nvalue = [0.0]\n\n[hypothesis]\nc = 0.5\n\n[exterior]\nradii = {radii}\nprobes = {probes}\n"
        )
    };
    let bad = [
        // below diam + 2η₀ + d₀ = 4
        exterior("[3.5, 5.0]", "[1.5]"),
        exterior("[5.0, 4.5]", "[1.5]"),
        exterior("[4.5, 6.0]", "[7.0]"),
        ball_with("family = \"constant\"\nvalue = [0.0]", "unknown_key = 1"),
        ball_with("family = \"constant\"\nvalue = [0.0]", "[flow]\ncfl = 1.5"),
        "mode = \"density_oracle\"\nh = 0.1\n".to_string(),
        ball_with("family = \"lawson_osserman\"\nscale = 1.0\nbase = \"hopf\"", ""),
    ];
    for text in &bad {
        let rejected = RunConfig::from_toml(text).and_then(|c| c.validate().map(|_| c)).is_err();
        assert!(rejected, "accepted:\n{text}");
    }
    assert!(RunConfig::from_toml(&exterior("[4.5, 6.0]", "[1.5]")).unwrap().validate().is_ok());
}
