//! Runs every acceptance criterion and prints one line per criterion.

use jlo_core::acceptance::{run_all, DEFAULT_SEED};

fn main() {
    let reports = run_all(DEFAULT_SEED);
    let mut failed = 0;
    for r in &reports {
        println!("{}", r.line());
        if !r.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", reports.len() - failed, reports.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
