//! Scenario files on disk: write a config, read it back, run it, and show
//! where the transcript's pieces live. Unknown fields are rejected, so a
//! typo cannot silently fall back to defaults.
//!
//!     cargo run --example scenario_files

use lbslab::protocol::{run_full_query, ScenarioConfig};

const DEMO: &str = r#"{
  "user_location": { "x": "30", "y": "40" },
  "history": [ { "x": "28", "y": "39" }, { "x": "35", "y": "42" } ],
  "pois": [
    { "x": "10", "y": "10" },
    { "x": "80", "y": "20" },
    { "x": "25", "y": "70" }
  ],
  "t": 3,
  "world_diameter": "80",
  "k_nn": 1,
  "seed": 7,
  "mode": "oracle"
}"#;

fn main() {
    // Omitted optional fields take their defaults (k_sec = 40, flags off).
    let config: ScenarioConfig = serde_json::from_str(DEMO).expect("well-formed scenario");
    println!("parsed scenario: t = {}, k_sec = {}, mode = {}", config.t, config.k_sec, config.mode);

    // A misspelled field fails loudly.
    let broken = DEMO.replace("\"k_nn\"", "\"k_nnn\"");
    let err = serde_json::from_str::<ScenarioConfig>(&broken).unwrap_err();
    println!("misspelled field rejected: {err}");

    let transcript = run_full_query(&config).expect("valid scenario");
    println!(
        "transcript: {} messages, {} comparisons, response carries {} POI(s)",
        transcript.messages.len(),
        transcript.comparisons.len(),
        transcript.response.opened.len()
    );
    println!("first message kind: {}", serde_json::to_string(&transcript.messages[0].payload).unwrap());
    println!("sidecar k-NN: {:?}", transcript.sidecar.knn);

    // The canonical JSON form round-trips byte for byte.
    let json = transcript.to_json();
    let reparsed = lbslab::protocol::FullTranscript::from_json(&json).unwrap();
    assert_eq!(reparsed.to_json(), json);
    println!("transcript JSON round-trips exactly ({} bytes)", json.len());
}
