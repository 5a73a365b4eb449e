//! Line-by-line walkthrough of the two published toy collisions: z = 3 and
//! z = 7 at l = 2 with rho = 31 produce the same (w_bar, rho_bar) = (2, 3)
//! while their comparison bits differ. Every printed value is re-asserted.
//!
//!     cargo run --example collision_walkthrough

use lbslab::cli::cmd_paper_examples;

fn main() {
    match cmd_paper_examples() {
        Ok(output) => print!("{output}"),
        Err(e) => {
            eprintln!("walkthrough failed: {e}");
            std::process::exit(4);
        }
    }
}
