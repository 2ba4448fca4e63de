//! One line per acceptance criterion. Run with
//! `cargo test -p lorentzcg --test acceptance -- --nocapture` to see them.

use lorentzcg::verify::{run, Config, ACCEPTANCE};

#[test]
fn acceptance() {
    let config = Config::default();
    let report = run(&ACCEPTANCE, &config).expect("known criteria");
    println!("seed {}", report.seed);
    for g in &report.groups {
        let worst = g.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).next();
        let max_ratio = g
            .checks
            .iter()
            .map(|c| if c.tolerance > 0.0 { c.residual / c.tolerance } else { c.residual })
            .fold(0.0f64, f64::max);
        println!(
            "criterion {:>2}: {} | {} ({} checks, worst residual/tolerance {:.2e}){}",
            g.id,
            if g.passed { "PASS" } else { "FAIL" },
            g.title,
            g.checks.len(),
            max_ratio,
            worst.map(|w| format!(" first failure: {w}")).unwrap_or_default()
        );
    }
    for n in &report.notes {
        println!("note: {} = {:.3e} ({})", n.name, n.value, n.detail);
    }
    let failed: Vec<_> = report.groups.iter().filter(|g| !g.passed).map(|g| g.id.clone()).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
