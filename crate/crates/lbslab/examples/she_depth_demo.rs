//! The real (ring-LWE) homomorphic backend running the distance circuit:
//! encrypt coordinates, square differences under encryption, watch the
//! noise budget shrink, and hit the explicit depth error instead of a wrong
//! answer.
//!
//!     cargo run --example she_depth_demo

use lbslab::numkit::{next_prime, BigInt, SeededRng};
use lbslab::she::{self, BackendKind, SecurityLevel, SheError, SheParams};

fn main() {
    let params = SheParams {
        plaintext_modulus: next_prime(&(BigInt::from(1u64) << 48)),
        security_level: SecurityLevel::Toy,
        max_depth: 2,
        seed: 1,
        backend: BackendKind::Rlwe,
    };
    let mut rng = SeededRng::new(params.seed);
    let keys = she::keygen(&params, &mut rng).expect("valid params");
    println!("plaintext modulus p = {}", params.plaintext_modulus);

    // Distance kernel: (tx - px)^2 + (ty - py)^2 under encryption.
    let (tx, ty) = (BigInt::from(93), BigInt::from(121));
    let (px, py) = (BigInt::from(30), BigInt::from(30));
    let enc = |v: &BigInt, rng: &mut SeededRng| she::encrypt(&keys.public, v, rng).unwrap();

    let ctx = enc(&tx, &mut rng);
    println!("fresh ciphertext: depth {}, noise budget {} bits",
        ctx.depth_used(), ctx.noise_budget_bits());

    let cty = enc(&ty, &mut rng);
    let cpx = enc(&px, &mut rng);
    let cpy = enc(&py, &mut rng);
    let dx = she::sub(&ctx, &cpx).unwrap();
    let dy = she::sub(&cty, &cpy).unwrap();
    let distance = she::add(&she::mul(&dx, &dx).unwrap(), &she::mul(&dy, &dy).unwrap()).unwrap();
    println!("distance ciphertext: depth {}, noise budget {} bits",
        distance.depth_used(), distance.noise_budget_bits());

    let got = she::decrypt(&keys.secret, &distance).unwrap();
    let want = (&tx - &px) * (&tx - &px) + (&ty - &py) * (&ty - &py);
    println!("decrypted {} (expected {})", got, want);
    assert_eq!(got, want);

    // One more multiplication level is within budget...
    let deeper = she::mul(&distance, &distance).unwrap();
    println!("squared once more: depth {}, noise budget {} bits",
        deeper.depth_used(), deeper.noise_budget_bits());

    // ...but the third level fails loudly rather than corrupting anything.
    match she::mul(&deeper, &deeper) {
        Err(SheError::DepthExhausted { depth, max }) => {
            println!("next multiplication refused: would need depth {depth}, max is {max}");
        }
        other => panic!("expected a depth error, got {other:?}"),
    }
}
