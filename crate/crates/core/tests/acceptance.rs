//! Acceptance criteria 1-8 at full sample sizes.
//!
//! Runs without the libtest harness so the PASS/FAIL table always reaches the
//! test log, and so the checks run one after another: their runtime budgets
//! are wall-clock. Exits nonzero if any criterion fails.

use jfts_core::verify::{self, CheckReport, Mode};

fn main() {
    // libtest conventions: `--list` and a name filter
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    if let Some(filter) = args.iter().find(|a| !a.starts_with('-')) {
        if !"acceptance".contains(filter.as_str()) {
            println!("acceptance: filtered out by '{filter}'");
            return;
        }
    }
    let (c5, c6) = verify::constraints_and_ase(Mode::Full);
    let reports: Vec<CheckReport> = vec![
        verify::special_functions(),
        verify::density_sanity(),
        verify::sampler_vs_analytic(Mode::Full),
        verify::ber_tail_oracle(),
        c5,
        c6,
        verify::orderings(),
        verify::determinism(),
    ];
    println!("acceptance criteria");
    for r in &reports {
        println!("{}", r.summary());
    }
    println!();
    for r in &reports {
        print!("{r}");
    }
    let failed: Vec<u32> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    if failed.is_empty() {
        println!("all {} criteria passed", reports.len());
    } else {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
