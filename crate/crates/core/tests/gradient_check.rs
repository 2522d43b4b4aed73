//! Trainer gradients against central finite differences of the relaxed
//! objective.

use hashcf_core::data::{Interaction, RatingBounds};
use hashcf_core::vhmodel::{
    batch_loss_and_grads, AffineRatingMap, CodeForward, Dissimilarity, EncoderParams, Gradients, Objective,
};
use hashcf_core::Embedding;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const M: usize = 6;
// Logits are multiples of 2^-6 and the step is 2^-12, so every perturbed
// value is exact in f32.
const H: f32 = 1.0 / 4096.0;

fn toy(rng: &mut ChaCha8Rng) -> (EncoderParams, Vec<Interaction>) {
    let mut table = |rows| {
        let data = (0..rows * M).map(|_| rng.random_range(-128i32..=128) as f32 / 64.0).collect();
        Embedding::from_vec(rows, M, data).unwrap()
    };
    let params = EncoderParams::new(table(5), table(5)).unwrap();
    let batch = (0..25u32)
        .map(|k| Interaction {
            user: k / 5,
            item: k % 5,
            rating: 1.0 + (k * 7 % 9) as f64 / 2.0,
            timestamp: None,
        })
        .collect();
    (params, batch)
}

fn loss(params: &EncoderParams, batch: &[Interaction], obj: &Objective) -> f64 {
    let mut g = Gradients::zeros_like(params);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    batch_loss_and_grads(batch, params, obj, CodeForward::Relaxed, 0.0, &mut rng, &mut g).unwrap()
}

fn check(kind: Dissimilarity, kl_weight: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (params, batch) = toy(&mut rng);
    let obj = Objective {
        map: AffineRatingMap::new(RatingBounds::default(), M).unwrap(),
        kind,
        kl_weight,
    };
    let mut grads = Gradients::zeros_like(&params);
    batch_loss_and_grads(&batch, &params, &obj, CodeForward::Relaxed, 0.0, &mut rng, &mut grads).unwrap();

    let n = 2 * 5 * M;
    for _ in 0..100 {
        let coord = rng.random_range(0..n);
        let (is_user, idx) = if coord < 5 * M { (true, coord) } else { (false, coord - 5 * M) };
        let bump = |delta: f32| {
            let mut p = params.clone();
            let t = if is_user { &mut p.users } else { &mut p.items };
            t.as_mut_slice()[idx] += delta;
            loss(&p, &batch, &obj)
        };
        let fd = (bump(H) - bump(-H)) / (2.0 * H as f64);
        let analytic = if is_user { grads.users[idx] } else { grads.items[idx] };
        let scale = fd.abs().max(analytic.abs());
        assert!(
            (fd - analytic).abs() <= 1e-4 * scale + 1e-10,
            "{kind:?} coord {coord}: analytic {analytic} vs fd {fd}"
        );
    }
}

#[test]
fn phd_gradients_match_finite_differences() {
    for seed in 0..3 {
        check(Dissimilarity::Phd, 0.0, seed);
        check(Dissimilarity::Phd, 0.1, seed);
    }
}

#[test]
fn hamming_gradients_match_finite_differences() {
    for seed in 0..3 {
        check(Dissimilarity::Hamming, 0.0, seed);
        check(Dissimilarity::Hamming, 0.3, seed);
    }
}
