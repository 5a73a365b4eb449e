//! Measure how often the protocol's own comparison rule agrees with ground
//! truth. It cannot beat guessing: the bit it is meant to extract is
//! independent of everything the rule is allowed to look at.
//!
//!     cargo run --example comparison_flaw

use lbslab::attacks::demonstrate_flaw;
use lbslab::numkit::SeededRng;
use lbslab::protocol::scenegen::flaw_demo_config;
use lbslab::protocol::Mode;

fn main() {
    let trials = 50_000;

    let faithful = flaw_demo_config(7);
    let mut rng = SeededRng::new(faithful.seed);
    let report = demonstrate_flaw(&faithful, trials, &mut rng).expect("valid config");
    println!(
        "faithful comparison: {} / {} decisions agreed with truth (rate {:.4})",
        report.agreements, report.trials, report.agreement_rate
    );

    let mut oracle = flaw_demo_config(7);
    oracle.mode = Mode::Oracle;
    let mut rng = SeededRng::new(oracle.seed);
    let control = demonstrate_flaw(&oracle, trials, &mut rng).expect("valid config");
    println!(
        "oracle control arm:  {} / {} decisions agreed with truth (rate {:.4})",
        control.agreements, control.trials, control.agreement_rate
    );

    let c = &report.counterexamples[0];
    println!("\nwitness collision (l = {}, rho = {}):", c.l, c.rho);
    println!(
        "  z = {}: w = {}, w_bar = {}, rho_bar = {}",
        c.z_low, c.w_low, c.w_bar, c.rho_bar
    );
    println!(
        "  z = {}: w = {}, w_bar = {}, rho_bar = {}",
        c.z_high, c.w_high, c.w_bar, c.rho_bar
    );
    println!("  identical observables, opposite comparison bit.");

    for note in &report.notes {
        println!("note: {note}");
    }
}
