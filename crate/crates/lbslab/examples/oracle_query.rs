//! One end-to-end query in oracle mode (ground-truth comparisons): the
//! correct baseline every other mode is measured against.
//!
//!     cargo run --example oracle_query

use lbslab::numkit::BigInt;
use lbslab::protocol::{run_full_query, GridPoint, Mode, ScenarioConfig};

fn main() {
    let config = ScenarioConfig {
        user_location: GridPoint::new(30, 40),
        history: vec![GridPoint::new(28, 39), GridPoint::new(35, 42)],
        pois: vec![
            GridPoint::new(10, 10),
            GridPoint::new(80, 20),
            GridPoint::new(25, 70),
            GridPoint::new(60, 60),
            GridPoint::new(5, 45),
        ],
        t: 3,
        k_sec: 40,
        world_diameter: BigInt::from(80),
        k_nn: 2,
        seed: 42,
        mode: Mode::Oracle,
        mask_range: None,
        random_history: false,
        leak_z: false,
        signed_mask: false,
    };

    let transcript = run_full_query(&config).expect("valid scenario");

    println!("derived parameters: n = {}, m = {}, l = {}, u = {}",
        transcript.derived.n, transcript.derived.m, transcript.derived.l, transcript.derived.u);
    println!("messages exchanged: {}", transcript.messages.len());
    println!(
        "scaled virtual location T = ({}, {})",
        transcript.sidecar.t_x, transcript.sidecar.t_y
    );
    println!("scaled squared distances: {:?}",
        transcript.sidecar.distances.iter().map(|d| d.to_string()).collect::<Vec<_>>());

    println!("\nresponse (nearest first):");
    for entry in &transcript.response.opened {
        println!("  POI {} at {}", entry.index, entry.location);
    }
    println!("ground-truth k-NN: {:?}", transcript.sidecar.knn);

    let got: Vec<usize> = transcript.response.opened.iter().map(|e| e.index).collect();
    assert_eq!(got, transcript.sidecar.knn, "oracle mode must match brute force");
    println!("\noracle mode agrees with the brute-force ranking.");
}
