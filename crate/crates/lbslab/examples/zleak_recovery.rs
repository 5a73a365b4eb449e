//! The "just disclose z" repair, defeated: with z = 2^l + d_a - d_b in
//! LBS's hands, the pairwise differences fall out by subtraction, the
//! radical-axis system pins the virtual location, and the moving average
//! inverts to the exact user coordinates.
//!
//!     cargo run --example zleak_recovery

use lbslab::attacks::full_attack_pipeline;
use lbslab::protocol::scenegen::{random_scene, SceneSpec};
use lbslab::protocol::{run_full_query, Mode};

fn main() {
    let spec = SceneSpec {
        mode: Mode::Faithful,
        leak_z: true,
        coord_bound: 5_000,
        ..SceneSpec::default()
    };

    for seed in 0..5u64 {
        let config = random_scene(&spec, seed);
        let transcript = run_full_query(&config).expect("valid scenario");
        let report = full_attack_pipeline(&transcript).expect("pipeline runs");

        let recovered = report.candidates[0]
            .user_location
            .as_ref()
            .expect("history known, location claimed");
        println!(
            "scene {seed}: n = {}, t = {} | true location {} | recovered {} | exact: {}",
            config.pois.len(),
            config.t,
            transcript.sidecar.user_location,
            recovered,
            recovered == &transcript.sidecar.user_location,
        );
        assert_eq!(recovered, &transcript.sidecar.user_location);
    }
    println!("\nevery query leaked the exact user location.");
}
