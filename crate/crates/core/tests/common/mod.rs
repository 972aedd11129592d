//! Independent oracles shared by the integration tests and the acceptance run.

#![allow(dead_code)]

use occlutrack::heatmap::{Peak, ResponseMap};
use occlutrack::losses::*;
use occlutrack::predictor::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Peak extraction the slow way: repeated linear scans for the maximum
/// (first index wins a tie), then the ratio filter, then greedy suppression.
pub fn brute_force_peaks(map: &ResponseMap, k: usize) -> Vec<(usize, usize, f64)> {
    let n = map.size();
    let mut taken = vec![false; n * n];
    let mut top = Vec::new();
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for i in 0..n * n {
            if taken[i] {
                continue;
            }
            match best {
                Some(b) if map.values()[i] <= map.values()[b] => {}
                _ => best = Some(i),
            }
        }
        let b = best.unwrap();
        taken[b] = true;
        top.push((b / n, b % n, map.values()[b]));
    }
    let floor = 0.75 * top[0].2;
    let filtered: Vec<_> = top
        .iter()
        .enumerate()
        .filter(|(j, p)| *j == 0 || p.2 > floor)
        .map(|(_, p)| *p)
        .collect();
    let mut kept: Vec<(usize, usize, f64)> = Vec::new();
    for p in filtered {
        let near = kept
            .iter()
            .any(|q| (q.0 as i64 - p.0 as i64).abs() <= 2 && (q.1 as i64 - p.1 as i64).abs() <= 2);
        if !near {
            kept.push(p);
        }
    }
    kept
}

pub fn as_tuples(peaks: &[Peak]) -> Vec<(usize, usize, f64)> {
    peaks.iter().map(|p| (p.row, p.col, p.score)).collect()
}

/// Random map; every third one is coarsely quantized so ties occur.
pub fn random_map(rng: &mut ChaCha8Rng, n: usize, level: u8, case: usize) -> ResponseMap {
    ResponseMap::from_fn(n, level, |_, _| {
        let v: f64 = rng.random_range(-1.0..1.0);
        if case % 3 == 0 {
            (v * 4.0).round() / 4.0
        } else {
            v
        }
    })
    .unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Central differences of a scalar function of a vector.
pub fn central_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut p = x.to_vec();
            p[k] += h;
            let mut m = x.to_vec();
            m[k] -= h;
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

/// Worst relative error between an analytic gradient and central differences.
pub fn worst_gap(analytic: &[f64], f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> f64 {
    let numeric = central_diff(f, x, 1e-6);
    analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| rel_err(*a, *n))
        .fold(0.0, f64::max)
}

fn probs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.02..0.98)).collect()
}

fn weights(rng: &mut ChaCha8Rng) -> LossWeights {
    LossWeights {
        lambda_pos: rng.random_range(0.1..2.0),
        lambda_neg: rng.random_range(0.1..2.0),
        alpha: rng.random_range(0.1..2.0),
        beta: rng.random_range(0.1..2.0),
    }
}

/// Box coordinates with every prediction at least 0.05 away from its label,
/// so the finite-difference stencil never straddles a kink of the L1 term.
fn boxes(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<BoxCoords>) {
    let mut pred = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n {
        let mut l = [0.0; 4];
        for k in 0..4 {
            l[k] = if k < 2 {
                rng.random_range(-5.0..5.0)
            } else {
                rng.random_range(1.0..9.0)
            };
            let off: f64 = rng.random_range(0.05..3.0);
            pred.push(l[k] + if rng.random::<bool>() { off } else { -off });
        }
        labels.push(l);
    }
    (pred, labels)
}

fn to_boxes(flat: &[f64]) -> Vec<BoxCoords> {
    flat.chunks(4).map(|c| [c[0], c[1], c[2], c[3]]).collect()
}

/// (loss name, instances checked, worst relative error).
pub fn loss_gradient_report(instances: usize, seed: u64) -> Vec<(&'static str, usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 9];
    for _ in 0..instances {
        let n = rng.random_range(1..8);
        let p = probs(&mut rng, n);
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let w = weights(&mut rng);
        let batch = ClsBatch::new(p.clone(), labels.clone()).unwrap();
        let with = |x: &[f64]| ClsBatch::new(x.to_vec(), labels.clone()).unwrap();

        worst[0] = worst[0].max(worst_gap(
            &cls_loss_pos_grad(&batch),
            &|x| cls_loss_pos(&with(x)),
            &p,
        ));
        worst[1] = worst[1].max(worst_gap(
            &cls_loss_neg_grad(&batch),
            &|x| cls_loss_neg(&with(x)),
            &p,
        ));
        worst[2] = worst[2].max(worst_gap(
            &cls_loss_grad(&batch, &w),
            &|x| cls_loss(&with(x), &w),
            &p,
        ));

        let nb = rng.random_range(1..5);
        let (bp, bl) = boxes(&mut rng, nb);
        let bbatch = BoxBatch::new(to_boxes(&bp), bl.clone()).unwrap();
        let reg_of = |x: &[f64]| reg_loss(&BoxBatch::new(to_boxes(x), bl.clone()).unwrap());
        let reg_grad: Vec<f64> = reg_loss_grad(&bbatch).into_iter().flatten().collect();
        worst[3] = worst[3].max(worst_gap(&reg_grad, &reg_of, &bp));

        // Total loss as a function of both prediction vectors at once.
        let joint: Vec<f64> = p.iter().chain(&bp).copied().collect();
        let total_of = |x: &[f64]| total_loss(cls_loss(&with(&x[..n]), &w), reg_of(&x[n..]), &w);
        let total_grad: Vec<f64> = cls_loss_grad(&batch, &w)
            .iter()
            .map(|g| w.alpha * g)
            .chain(reg_grad.iter().map(|g| w.beta * g))
            .collect();
        worst[4] = worst[4].max(worst_gap(&total_grad, &total_of, &joint));

        for (slot, gamma) in [(5usize, 0u8), (6, 1)] {
            let g = occlusion_supervised_cls_loss_grad(&batch, &w, gamma).unwrap();
            let f = |x: &[f64]| occlusion_supervised_cls_loss(&with(x), &w, gamma).unwrap();
            worst[slot] = worst[slot].max(worst_gap(&g, &f, &p));
        }

        let nr = rng.random_range(1..6);
        let nf = rng.random_range(1..6);
        let real = probs(&mut rng, nr);
        let fake = probs(&mut rng, nf);
        let grad = gan_loss_grad(&real, &fake).unwrap();
        let both: Vec<f64> = real.iter().chain(&fake).copied().collect();
        let d_of = |x: &[f64]| gan_loss(&x[..nr], &x[nr..]).unwrap().1;
        let d_grad: Vec<f64> = grad
            .d_loss_wrt_real
            .iter()
            .chain(&grad.d_loss_wrt_fake)
            .copied()
            .collect();
        worst[7] = worst[7].max(worst_gap(&d_grad, &d_of, &both));
        let g_of = |x: &[f64]| gan_loss(&real, x).unwrap().0;
        worst[8] = worst[8].max(worst_gap(&grad.g_loss_wrt_fake, &g_of, &fake));
    }
    let names = [
        "cls_loss_pos",
        "cls_loss_neg",
        "cls_loss",
        "reg_loss",
        "total_loss",
        "occlusion_supervised (gamma=0)",
        "occlusion_supervised (gamma=1)",
        "gan discriminator loss",
        "gan generator loss",
    ];
    names
        .iter()
        .zip(worst)
        .map(|(n, w)| (*n, instances, w))
        .collect()
}

/// A straight track at `speed` px/frame with random heading and placement.
pub fn line(rng: &mut ChaCha8Rng, len: usize, speed: f64) -> Trajectory {
    let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let start = [rng.random_range(20.0..80.0), rng.random_range(20.0..80.0)];
    let pts = (0..len)
        .map(|t| {
            [
                start[0] + speed * th.cos() * t as f64,
                start[1] + speed * th.sin() * t as f64,
            ]
        })
        .collect();
    Trajectory::contiguous(pts, 0).unwrap()
}
