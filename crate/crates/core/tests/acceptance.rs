//! Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use longtrack::bench::{cli, evaluate, run_bench, run_sequence, synth_sequence, SynthSpec, DP_THRESHOLD};
use longtrack::dcf::{
    correlate_locate, grid_center, learn_filter, learn_filter_traced, make_label, Filter, RegressionLabel, SolverParams, SpatialWeight,
};
use longtrack::features::{ColorHistogram, FeatureMap};
use longtrack::imaging::max_sum_window;
use longtrack::motion::{motion_proposal, SizeMode};
use longtrack::recovery::{similarity_chisq, similarity_corr};
use longtrack::shape::{color_saliency, fuse_shape, key_weights, mrf_energy, segment_mrf, segment_mrf_traced, MrfParams, SeedSet};
use longtrack::{Ablation, BoundingBox, Frame, ScalarMap, TrackerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// 1. Windowed search

fn direct_window_sum(map: &ScalarMap, x: usize, y: usize, w: usize, h: usize) -> f64 {
    let mut s = 0.0;
    for j in y..y + h {
        for i in x..x + w {
            s += map.get(i, j);
        }
    }
    s
}

fn exhaustive_max_window(map: &ScalarMap, w: usize, h: usize) -> BoundingBox {
    let mut best = (0, 0, f64::NEG_INFINITY);
    for y in 0..=map.height() - h {
        for x in 0..=map.width() - w {
            let s = direct_window_sum(map, x, y, w, h);
            if s > best.2 {
                best = (x, y, s);
            }
        }
    }
    BoundingBox::new(best.0 as f64, best.1 as f64, w as f64, h as f64)
}

fn windowed_search() -> Check {
    let mut r = rng(1);
    let mut ties = 0;
    for case in 0..200 {
        let (mw, mh) = (r.gen_range(1..=64), r.gen_range(1..=64));
        // Small integers keep every window sum exact; sparse maps force ties.
        let density = if case % 4 == 0 { 0.05 } else { 1.0 };
        let mut values: Vec<f64> = (0..mw * mh).map(|_| if r.gen_bool(density) { r.gen_range(0..10) as f64 } else { 0.0 }).collect();
        values[r.gen_range(0..mw * mh)] += 1.0;
        let map = ScalarMap::new(mw, mh, values).unwrap();
        let (ww, wh) = (r.gen_range(1..=mw), r.gen_range(1..=mh));
        let got = motion_proposal(&map, (ww as f64, wh as f64), SizeMode::Fixed).map_err(|e| format!("case {case}: {e}"))?;
        let want = exhaustive_max_window(&map, ww, wh);
        ensure(got == want, || format!("case {case} ({mw}x{mh}, window {ww}x{wh}): {got:?} vs {want:?}"))?;
        let (_, mass) = max_sum_window(&map, ww, wh).unwrap();
        let tied = (0..=mh - wh)
            .flat_map(|y| (0..=mw - ww).map(move |x| (x, y)))
            .filter(|&(x, y)| direct_window_sum(&map, x, y, ww, wh) == mass)
            .count();
        ties += (tied > 1) as usize;
    }
    Ok(format!("200 maps identical, {ties} with tied maxima"))
}

// 2. Correlation

fn random_features(r: &mut ChaCha8Rng, w: usize, h: usize, d: usize) -> FeatureMap {
    FeatureMap::new(w, h, d, (0..w * h * d).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Centered circular cross-correlation: cell `u` holds displacement `u - c`.
fn direct_response(coeffs: &[f64], x: &FeatureMap) -> Vec<f64> {
    let (w, h, d) = (x.grid_w(), x.grid_h(), x.channels());
    let (cx, cy) = grid_center(w, h);
    let mut out = vec![0.0; w * h];
    for uy in 0..h {
        for ux in 0..w {
            let mut acc = 0.0;
            for c in 0..d {
                for ny in 0..h {
                    for nx in 0..w {
                        acc += coeffs[c * w * h + ny * w + nx] * x.get(c, (nx + ux + w - cx) % w, (ny + uy + h - cy) % h);
                    }
                }
            }
            out[uy * w + ux] = acc;
        }
    }
    out
}

fn correlation() -> Check {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let x = random_features(&mut r, 8, 8, 3);
        let f = Filter::from_coeffs(8, 8, 3, (0..192).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        let got = correlate_locate(&f, &x).map_err(|e| format!("case {case}: {e}"))?;
        let want = direct_response(f.coeffs(), &x);
        for (a, b) in got.response.values().iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst < 1e-6, || format!("max abs error {worst:.3e}"))?;
    Ok(format!("50 instances, max abs error {worst:.2e}"))
}

// 3. Solver

fn spatial_objective(coeffs: &[f64], x: &FeatureMap, y: &RegressionLabel, w: &SpatialWeight, prev: Option<&[f64]>, mu: f64) -> f64 {
    let n = x.cells();
    let r = direct_response(coeffs, x);
    let data: f64 = r.iter().zip(y.values()).map(|(a, b)| 0.5 * (a - b).powi(2)).sum();
    let reg: f64 = coeffs.iter().enumerate().map(|(i, c)| 0.5 * (w.values()[i % n] * c).powi(2)).sum();
    let temporal = prev.map_or(0.0, |p| 0.5 * mu * coeffs.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>());
    data + reg + temporal
}

/// Naive 2-D DFT with sign `-1` (forward) or `+1` (inverse, unscaled).
fn dft2(re: &[f64], im: &[f64], w: usize, h: usize, sign: f64) -> (Vec<f64>, Vec<f64>) {
    let mut out_re = vec![0.0; w * h];
    let mut out_im = vec![0.0; w * h];
    for ky in 0..h {
        for kx in 0..w {
            let (mut sr, mut si) = (0.0, 0.0);
            for ny in 0..h {
                for nx in 0..w {
                    let phase = sign * 2.0 * std::f64::consts::PI * ((kx * nx) as f64 / w as f64 + (ky * ny) as f64 / h as f64);
                    let (c, s) = (phase.cos(), phase.sin());
                    let (a, b) = (re[ny * w + nx], im[ny * w + nx]);
                    sr += a * c - b * s;
                    si += a * s + b * c;
                }
            }
            out_re[ky * w + kx] = sr;
            out_im[ky * w + kx] = si;
        }
    }
    (out_re, out_im)
}

/// Minimizer of `½‖x ⋆ f − y₀‖² + ½λ²‖f‖²` for one channel, with `y₀` the
/// label moved to the origin: `F = X·conj(Y₀) / (|X|² + λ²)`.
fn closed_form(x: &[f64], y: &RegressionLabel, lambda: f64, w: usize, h: usize) -> Vec<f64> {
    let (cx, cy) = grid_center(w, h);
    let mut y0 = vec![0.0; w * h];
    for j in 0..h {
        for i in 0..w {
            y0[((j + h - cy) % h) * w + (i + w - cx) % w] = y.get(i, j);
        }
    }
    let zeros = vec![0.0; w * h];
    let (xr, xi) = dft2(x, &zeros, w, h, -1.0);
    let (yr, yi) = dft2(&y0, &zeros, w, h, -1.0);
    let mut fr = vec![0.0; w * h];
    let mut fi = vec![0.0; w * h];
    for k in 0..w * h {
        let denom = xr[k] * xr[k] + xi[k] * xi[k] + lambda * lambda;
        // X · conj(Y)
        fr[k] = (xr[k] * yr[k] + xi[k] * yi[k]) / denom;
        fi[k] = (xi[k] * yr[k] - xr[k] * yi[k]) / denom;
    }
    let (f, _) = dft2(&fr, &fi, w, h, 1.0);
    f.iter().map(|v| v / (w * h) as f64).collect()
}

fn solver() -> Check {
    let mut r = rng(3);
    let iters = 8;
    for case in 0..20 {
        let (w, h, d) = (r.gen_range(5..=10), r.gen_range(5..=10), r.gen_range(1..=3));
        let x = random_features(&mut r, w, h, d);
        let y = make_label(w, h, r.gen_range(0.6..2.0)).unwrap();
        let weight = SpatialWeight::quadratic_bowl(w, h, r.gen_range(2.0..w as f64), r.gen_range(2.0..h as f64)).unwrap();
        let prev: Option<Filter> =
            (case % 2 == 1).then(|| Filter::from_coeffs(w, h, d, (0..w * h * d).map(|_| r.gen_range(-0.3..0.3)).collect()).unwrap());
        let mu = if prev.is_some() { r.gen_range(0.5..20.0) } else { 0.0 };
        let mut last = f64::INFINITY;
        for k in 0..=iters {
            let params = SolverParams { iterations: k, ..SolverParams::default() };
            let f = learn_filter(&x, &y, prev.as_ref(), &weight, mu, &params).map_err(|e| format!("case {case}: {e}"))?;
            let obj = spatial_objective(f.coeffs(), &x, &y, &weight, prev.as_ref().map(|p| p.coeffs()), mu);
            ensure(obj <= last * (1.0 + 1e-12) + 1e-12, || format!("case {case}: objective rose {last} -> {obj} at iteration {k}"))?;
            last = obj;
        }
        let trace = learn_filter_traced(&x, &y, prev.as_ref(), &weight, mu, &SolverParams { iterations: iters, ..SolverParams::default() })
            .unwrap();
        ensure(trace.objectives.windows(2).all(|p| p[1] <= p[0]), || format!("case {case}: reported objectives rise"))?;
        let reported = *trace.objectives.last().unwrap();
        ensure((reported - last).abs() <= 1e-9 * last.abs().max(1.0), || format!("case {case}: reported {reported} vs spatial {last}"))?;
    }

    let mut worst: f64 = 0.0;
    for case in 0..5 {
        let (w, h) = (8, 8);
        let x = random_features(&mut r, w, h, 1);
        let y = make_label(w, h, 1.0).unwrap();
        let lambda = r.gen_range(0.3..2.0);
        let weight = SpatialWeight::constant(w, h, lambda).unwrap();
        let params = SolverParams { iterations: 3000, penalty_init: 1.0, penalty_step: 1.0, penalty_max: 1.0 };
        let f = learn_filter(&x, &y, None, &weight, 0.0, &params).map_err(|e| format!("closed form {case}: {e}"))?;
        let want = closed_form(x.channel(0), &y, lambda, w, h);
        let num: f64 = f.coeffs().iter().zip(&want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = want.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(num / den);
    }
    ensure(worst < 1e-4, || format!("closed form relative error {worst:.3e}"))?;
    Ok(format!("20 instances monotone over {iters} iterations; closed form relative error {worst:.2e}"))
}

// 4. MRF

fn seeds_for(f: &Frame, obj: &BoundingBox, n: usize, r: &mut ChaCha8Rng) -> SeedSet {
    let (mut fg, mut bg) = (Vec::new(), Vec::new());
    while fg.len() < n || bg.len() < n {
        let (x, y) = (r.gen_range(0..f.width()), r.gen_range(0..f.height()));
        if obj.contains_point(x as f64 + 0.5, y as f64 + 0.5) {
            if fg.len() < n && !fg.contains(&(x, y)) {
                fg.push((x, y));
            }
        } else if bg.len() < n && !bg.contains(&(x, y)) {
            bg.push((x, y));
        }
    }
    SeedSet { fg, bg, rng_seed: 0 }
}

fn mrf() -> Check {
    let mut r = rng(4);
    let mut sweeps = 0;
    for case in 0..20 {
        let obj =
            BoundingBox::new(r.gen_range(1..6) as f64, r.gen_range(1..6) as f64, r.gen_range(5..10) as f64, r.gen_range(5..10) as f64);
        let fg_col: [f32; 3] = [r.gen_range(0.0..255.0), r.gen_range(0.0..255.0), r.gen_range(0.0..255.0)];
        let bg_col: [f32; 3] = [r.gen_range(0.0..255.0), r.gen_range(0.0..255.0), r.gen_range(0.0..255.0)];
        let noise = r.gen_range(10.0..90.0);
        let patch = Frame::from_fn(16, 16, |x, y| {
            let base = if obj.contains_point(x as f64 + 0.5, y as f64 + 0.5) { fg_col } else { bg_col };
            base.map(|v| (v + r.gen_range(-noise..noise)).clamp(0.0, 255.0))
        });
        let seeds = seeds_for(&patch, &obj, 5, &mut r);
        let params = MrfParams { max_iters: 500, ..MrfParams::default() };
        let (mask, energies) = segment_mrf_traced(&patch, &seeds, &params).map_err(|e| format!("case {case}: {e}"))?;
        ensure(energies.windows(2).all(|p| p[1] <= p[0] + 1e-9), || format!("case {case}: energy rose {energies:?}"))?;
        sweeps += energies.len() - 1;
        let clamped: HashSet<(usize, usize)> = seeds.fg.iter().chain(&seeds.bg).copied().collect();
        let base = mrf_energy(&patch, &seeds, &params, mask.labels()).unwrap();
        ensure((base - mask.energy()).abs() <= 1e-9 * base.abs().max(1.0), || format!("case {case}: reported energy differs"))?;
        let mut labels = mask.labels().to_vec();
        for i in 0..labels.len() {
            if clamped.contains(&(i % 16, i / 16)) {
                continue;
            }
            labels[i] ^= 1;
            let flipped = mrf_energy(&patch, &seeds, &params, &labels).unwrap();
            ensure(flipped >= base - 1e-9, || format!("case {case}: flipping pixel {i} lowers energy {base} -> {flipped}"))?;
            labels[i] ^= 1;
        }
    }

    let obj = BoundingBox::new(9.0, 7.0, 13.0, 16.0);
    let patch =
        Frame::from_fn(
            32,
            32,
            |x, y| if obj.contains_point(x as f64 + 0.5, y as f64 + 0.5) { [210.0, 50.0, 40.0] } else { [40.0, 80.0, 190.0] },
        );
    let seeds = seeds_for(&patch, &obj, 12, &mut r);
    let mask = segment_mrf(&patch, &seeds, 10).map_err(|e| format!("two-color: {e}"))?;
    let (mut inter, mut union) = (0, 0);
    for y in 0..32 {
        for x in 0..32 {
            let t = obj.contains_point(x as f64 + 0.5, y as f64 + 0.5);
            let p = mask.get(x, y) == 1;
            inter += (t && p) as usize;
            union += (t || p) as usize;
        }
    }
    let iou = inter as f64 / union as f64;
    ensure(iou >= 0.95, || format!("two-color IoU {iou:.3}"))?;
    Ok(format!("20 instances ({sweeps} sweeps) monotone and flip-stable; two-color IoU {iou:.3}"))
}

// 5. Similarities

fn vector(v: &[f64]) -> FeatureMap {
    FeatureMap::new(v.len(), 1, 1, v.to_vec()).unwrap()
}

fn histogram(r: &mut ChaCha8Rng, n: usize) -> ColorHistogram {
    let raw: Vec<f64> = (0..n).map(|_| if r.gen_bool(0.2) { 0.0 } else { r.gen_range(0.0..1.0) }).collect();
    let s: f64 = raw.iter().sum();
    if s == 0.0 {
        let mut one = vec![0.0; n];
        one[0] = 1.0;
        return ColorHistogram::from_bins(one);
    }
    ColorHistogram::from_bins(raw.iter().map(|v| v / s).collect())
}

fn similarity() -> Check {
    let mut r = rng(5);
    for case in 0..100 {
        let a = random_features(&mut r, 4, 3, 2);
        let self_sim = similarity_corr(&a, &a).unwrap();
        ensure((self_sim - 1.0).abs() <= 1e-12, || format!("case {case}: self-similarity {self_sim}"))?;
        let b = random_features(&mut r, 4, 3, 2);
        let c = r.gen_range(0.01..100.0);
        let scaled = FeatureMap::new(4, 3, 2, b.as_slice().iter().map(|v| v * c).collect()).unwrap();
        let (s, sc) = (similarity_corr(&a, &b).unwrap(), similarity_corr(&a, &scaled).unwrap());
        ensure((s - sc).abs() <= 1e-12, || format!("case {case}: scale changed s1 {s} -> {sc}"))?;

        let (p, q) = (histogram(&mut r, 8), histogram(&mut r, 8));
        let (pq, qp) = (similarity_chisq(&p, &q).unwrap(), similarity_chisq(&q, &p).unwrap());
        ensure(pq == qp && pq >= 0.0, || format!("case {case}: chi-square {pq} vs {qp}"))?;
        ensure((pq == 0.0) == (p.bins() == q.bins()), || format!("case {case}: zero iff equal violated"))?;
        ensure(similarity_chisq(&p, &p).unwrap() == 0.0, || format!("case {case}: self distance nonzero"))?;
    }
    let worked = [
        (similarity_corr(&vector(&[1.0, 0.0]), &vector(&[0.0, 1.0])).unwrap(), 0.0),
        (similarity_corr(&vector(&[1.0, 1.0]), &vector(&[1.0, 0.0])).unwrap(), std::f64::consts::FRAC_1_SQRT_2),
        (similarity_chisq(&ColorHistogram::from_bins(vec![0.3, 0.7]), &ColorHistogram::from_bins(vec![0.3, 0.7])).unwrap(), 0.0),
        (similarity_chisq(&ColorHistogram::from_bins(vec![1.0, 0.0]), &ColorHistogram::from_bins(vec![0.0, 1.0])).unwrap(), 2.0),
        (
            similarity_chisq(&ColorHistogram::from_bins(vec![0.5, 0.5]), &ColorHistogram::from_bins(vec![0.25, 0.75])).unwrap(),
            0.0625 / 0.75 + 0.0625 / 1.25,
        ),
    ];
    for (i, (got, want)) in worked.iter().enumerate() {
        ensure((got - want).abs() <= 1e-9, || format!("worked value {i}: {got} vs {want}"))?;
    }
    Ok("100 random pairs; worked values reproduced".into())
}

// 6. Color saliency

fn css() -> Check {
    let mut r = rng(6);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let n = r.gen_range(2..=12);
        let keys: Vec<[f64; 3]> = (0..n).map(|_| [r.gen_range(0.0..1.0), r.gen_range(0.0..1.0), r.gen_range(0.0..1.0)]).collect();
        let dist = |r: &mut ChaCha8Rng| {
            let raw: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect::<Vec<f64>>()
        };
        let (p_in, p_out) = (dist(&mut r), dist(&mut r));
        let raw: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..n {
                    if j != i {
                        let d2: f64 = (0..3).map(|c| (keys[i][c] - keys[j][c]).powi(2)).sum();
                        s += d2.exp();
                    }
                }
                s
            })
            .collect();
        let z: f64 = raw.iter().sum();
        let (got, got_z) = color_saliency(&keys, &p_in, &p_out).map_err(|e| format!("case {case}: {e}"))?;
        ensure((got_z - z).abs() <= 1e-9 * z, || format!("case {case}: Z {got_z} vs {z}"))?;
        for i in 0..n {
            worst = worst.max((got[i] - raw[i] / z * (p_in[i] - p_out[i])).abs());
        }
        let (weights, wz) = key_weights(&keys).unwrap();
        let total: f64 = weights.iter().map(|w| w / wz).sum();
        ensure((total - 1.0).abs() <= 1e-12, || format!("case {case}: weights sum to {total}"))?;
        let (flat, _) = color_saliency(&keys, &p_in, &p_in).unwrap();
        ensure(flat.iter().all(|&v| v == 0.0), || format!("case {case}: p_in = p_out gives {flat:?}"))?;
    }
    ensure(worst <= 1e-9, || format!("max termwise error {worst:.3e}"))?;
    Ok(format!("50 models, max termwise error {worst:.2e}"))
}

// 7. Fusion

fn int_iou(a: (i64, i64, i64, i64), b: (i64, i64, i64, i64)) -> f64 {
    let iw = (a.0 + a.2).min(b.0 + b.2) - a.0.max(b.0);
    let ih = (a.1 + a.3).min(b.1 + b.3) - a.1.max(b.1);
    if iw <= 0 || ih <= 0 {
        return 0.0;
    }
    let inter = iw * ih;
    inter as f64 / (a.2 * a.3 + b.2 * b.3 - inter) as f64
}

fn fusion() -> Check {
    let mut r = rng(7);
    let mut tie_cases = 0;
    for case in 0..100 {
        let gen = |r: &mut ChaCha8Rng| (r.gen_range(0..30), r.gen_range(0..30), r.gen_range(1..20), r.gen_range(1..20));
        let bb = gen(&mut r);
        let bm = if case % 5 == 0 { bb } else { gen(&mut r) };
        let n = r.gen_range(1..15);
        let mut cands: Vec<(i64, i64, i64, i64)> = (0..n).map(|_| gen(&mut r)).collect();
        if case % 3 == 0 {
            let dup = cands[0];
            cands.push((dup.0 + 40, dup.1 + 40, dup.2, dup.3));
        }
        let score = |c: &(i64, i64, i64, i64)| int_iou(*c, bb) + int_iou(*c, bm);
        let best_score = cands.iter().map(score).fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<_> = cands.iter().filter(|c| score(c) == best_score).collect();
        tie_cases += (tied.len() > 1) as usize;
        let gap = |c: &(i64, i64, i64, i64)| (c.2 * c.3 - bb.2 * bb.3).abs();
        let want = **tied.iter().min_by(|a, b| gap(a).cmp(&gap(b)).then(a.cmp(b))).unwrap();

        let to_box = |c: &(i64, i64, i64, i64)| BoundingBox::new(c.0 as f64, c.1 as f64, c.2 as f64, c.3 as f64);
        let boxes: Vec<BoundingBox> = cands.iter().map(to_box).collect();
        let (got, got_score) = fuse_shape(&boxes, &to_box(&bb), &to_box(&bm)).map_err(|e| format!("case {case}: {e}"))?;
        ensure(got == to_box(&want) && got_score == best_score, || {
            format!("case {case}: {got:?} ({got_score}) vs {want:?} ({best_score})")
        })?;
    }
    Ok(format!("100 candidate sets identical, {tie_cases} with ties"))
}

// 8. Metrics

fn metrics() -> Check {
    let mut r = rng(8);
    for case in 0..50 {
        let n = r.gen_range(1..60);
        let gen = |r: &mut ChaCha8Rng, allow_empty: bool| {
            let w = if allow_empty && r.gen_bool(0.1) { 0.0 } else { r.gen_range(1..40) as f64 };
            BoundingBox::new(r.gen_range(0..80) as f64, r.gen_range(0..80) as f64, w, r.gen_range(1..40) as f64)
        };
        let mut gt: Vec<BoundingBox> = (0..n).map(|_| gen(&mut r, true)).collect();
        gt[0] = BoundingBox::new(5.0, 5.0, 10.0, 10.0);
        let pred: Vec<BoundingBox> = gt
            .iter()
            .map(|g| {
                if r.gen_bool(0.4) && g.is_valid() {
                    g.translated(r.gen_range(-8..=8) as f64, r.gen_range(-8..=8) as f64)
                } else {
                    gen(&mut r, true)
                }
            })
            .collect();
        let report = evaluate(&pred, &gt).map_err(|e| format!("case {case}: {e}"))?;

        let mut dists = Vec::new();
        let mut ious = Vec::new();
        for (p, g) in pred.iter().zip(&gt) {
            if !(g.w > 0.0 && g.h > 0.0) {
                continue;
            }
            let (pc, gc) = ((p.x + p.w / 2.0, p.y + p.h / 2.0), (g.x + g.w / 2.0, g.y + g.h / 2.0));
            dists.push(((pc.0 - gc.0).powi(2) + (pc.1 - gc.1).powi(2)).sqrt());
            let q = |b: &BoundingBox| (b.x as i64, b.y as i64, b.w as i64, b.h as i64);
            ious.push(if p.w > 0.0 && p.h > 0.0 { int_iou(q(p), q(g)) } else { 0.0 });
        }
        let m = dists.len() as f64;
        let dp = dists.iter().filter(|&&d| d <= DP_THRESHOLD).count() as f64 / m;
        let success: Vec<f64> =
            (0..=20).map(|i| i as f64 / 20.0).map(|t| ious.iter().filter(|&&v| v > 0.0 && v >= t).count() as f64 / m).collect();
        let auc = success.iter().sum::<f64>() / success.len() as f64;
        let precision: Vec<f64> = (0..=50).map(|t| dists.iter().filter(|&&d| d <= t as f64).count() as f64 / m).collect();
        ensure(report.frames == dists.len(), || format!("case {case}: frame count {} vs {}", report.frames, dists.len()))?;
        ensure(report.dp == dp && report.auc == auc, || format!("case {case}: dp {} auc {} vs {dp} {auc}", report.dp, report.auc))?;
        ensure(report.success.iter().map(|s| s.1).eq(success.iter().copied()), || format!("case {case}: success curve differs"))?;
        ensure(report.precision.iter().map(|s| s.1).eq(precision.iter().copied()), || format!("case {case}: precision curve differs"))?;
    }

    let gt: Vec<BoundingBox> = (0..10).map(|i| BoundingBox::new(10.0 + i as f64, 20.0, 30.0, 40.0)).collect();
    let far: Vec<BoundingBox> = gt.iter().map(|b| b.translated(500.0, 500.0)).collect();
    let half: Vec<BoundingBox> = gt.iter().zip(&far).enumerate().map(|(i, (g, f))| if i % 2 == 0 { *g } else { *f }).collect();
    for (name, pred, want) in [("perfect", &gt, 1.0), ("total failure", &far, 0.0), ("half", &half, 0.5)] {
        let rep = evaluate(pred, &gt).unwrap();
        ensure(rep.dp == want && rep.auc == want, || format!("{name}: dp {} auc {}", rep.dp, rep.auc))?;
    }
    Ok("50 random pairs identical; perfect/failure/half exact".into())
}

// 9-10. Synthetic tracking

fn track(spec: &SynthSpec, ablation: Ablation) -> Result<Vec<BoundingBox>, String> {
    let seq = synth_sequence(spec).map_err(|e| e.to_string())?;
    Ok(run_sequence(&seq, &TrackerConfig::default(), ablation).map_err(|e| e.to_string())?.boxes)
}

fn reacquired(spec: &SynthSpec, boxes: &[BoundingBox], from: usize) -> Option<usize> {
    let seq = synth_sequence(spec).ok()?;
    (from..(from + 5).min(boxes.len())).find(|&t| {
        let g = seq.groundtruth[t];
        let (p, q) = (boxes[t].center(), g.center());
        g.is_valid() && ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt() < g.w / 2.0
    })
}

fn synthetic_tracking() -> Check {
    let pan = SynthSpec::camera_pan();
    let seq = synth_sequence(&pan).map_err(|e| e.to_string())?;
    let boxes = track(&pan, Ablation::Full)?;
    let ious: Vec<f64> = boxes.iter().zip(&seq.groundtruth).map(|(p, g)| p.iou(g)).collect();
    let mean_iou = ious.iter().sum::<f64>() / ious.len() as f64;
    let dp = evaluate(&boxes, &seq.groundtruth).map_err(|e| e.to_string())?.dp;
    ensure(mean_iou >= 0.5 && dp >= 0.9, || format!("pan: mean IoU {mean_iou:.3}, DP {dp:.3}"))?;

    let occ = SynthSpec::occlusion_recovery();
    let back = occ.occlusion.ok_or("occlusion preset has no occlusion")?[1];
    let full = reacquired(&occ, &track(&occ, Ablation::Full)?, back);
    let base = reacquired(&occ, &track(&occ, Ablation::Baseline)?, back);
    ensure(full.is_some() && base.is_none(), || format!("occlusion: full re-acquires at {full:?}, baseline at {base:?}"))?;
    Ok(format!("pan mean IoU {mean_iou:.3} DP {dp:.3}; occlusion full re-acquires at frame {}, baseline never", full.unwrap()))
}

fn ablation_direction() -> Check {
    let mut parts = Vec::new();
    let mut failed = false;
    for spec in [SynthSpec::camera_pan(), SynthSpec::occlusion_recovery(), SynthSpec::deformation()] {
        let seq = synth_sequence(&spec).map_err(|e| e.to_string())?;
        let auc = |a| -> Result<f64, String> { Ok(evaluate(&track(&spec, a)?, &seq.groundtruth).map_err(|e| e.to_string())?.auc) };
        let (full, base) = (auc(Ablation::Full)?, auc(Ablation::Baseline)?);
        failed |= full < base;
        parts.push(format!("{} {base:.3}->{full:.3}", spec.name));
    }
    let msg = format!("AUC baseline->full: {}", parts.join(", "));
    if failed {
        Err(msg)
    } else {
        Ok(msg)
    }
}

// 11. Determinism

const PAN_SPEC: &str = r#"{
  "name": "pan", "width": 256, "height": 192, "frames": 100, "seed": 11,
  "object": {"w": 28, "h": 24, "color": [220, 40, 40]},
  "path": [[0, 90, 96], [99, 270, 136]],
  "pan": [1.2, 0.5]
}"#;

fn cli_ok(args: &[&Path]) -> Result<(), String> {
    let mut argv: Vec<std::ffi::OsString> = vec!["longtrack".into()];
    argv.extend(args.iter().map(|a| a.as_os_str().to_owned()));
    match cli::main_with_args(argv) {
        0 => Ok(()),
        code => Err(format!("{args:?} exited with {code}")),
    }
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, PAN_SPEC).map_err(|e| e.to_string())?;
    let seq = dir.path().join("pan");
    cli_ok(&[Path::new("synth"), Path::new("--spec"), &spec, Path::new("--out"), &seq])?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        cli_ok(&[Path::new("track"), Path::new("--seq"), &seq, Path::new("--out"), &out])?;
        outputs.push(std::fs::read(out.join("pan.txt")).map_err(|e| e.to_string())?);
    }
    ensure(outputs[0] == outputs[1], || "results files differ".into())?;
    ensure(!outputs[0].is_empty(), || "empty results".into())?;
    Ok(format!("two runs byte-identical ({} bytes)", outputs[0].len()))
}

// 12. Local dataset

const DATASET_ENV: &str = "LONGTRACK_DATASET";

fn sequence_dirs(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![(root.to_path_buf(), 0)];
    while let Some((dir, depth)) = stack.pop() {
        if dir.join("img").is_dir() && dir.join("groundtruth.txt").is_file() {
            out.push(dir);
            continue;
        }
        if depth < 2 {
            if let Ok(entries) = std::fs::read_dir(&dir) {
                stack.extend(entries.flatten().map(|e| e.path()).filter(|p| p.is_dir()).map(|p| (p, depth + 1)));
            }
        }
    }
    out.sort();
    out
}

fn dataset() -> Option<Check> {
    let root = PathBuf::from(std::env::var_os(DATASET_ENV)?);
    let dirs = sequence_dirs(&root);
    if dirs.len() < 5 {
        return Some(Err(format!("{} sequences under {}, need at least 5", dirs.len(), root.display())));
    }
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mean_auc = |a| -> Result<f64, String> {
        let res = run_bench(&dirs, &TrackerConfig::default(), a, jobs).map_err(|e| e.to_string())?;
        Ok(res.iter().map(|(_, m)| m.auc).sum::<f64>() / res.len() as f64)
    };
    Some((|| {
        let (full, base) = (mean_auc(Ablation::Full)?, mean_auc(Ablation::Baseline)?);
        let msg = format!("{} sequences, AUC baseline {:.1} full {:.1}", dirs.len(), base * 100.0, full * 100.0);
        // Ties within half an AUC point count as passing.
        if full >= base - 0.005 {
            Ok(msg)
        } else {
            Err(msg)
        }
    })())
}

fn report(id: usize, name: &str, limit: Option<Duration>, check: impl FnOnce() -> Option<Check>) -> &'static str {
    let start = Instant::now();
    let outcome = check();
    let elapsed = start.elapsed();
    let timing = match limit {
        Some(l) => format!("{:.2} s, limit {} s", elapsed.as_secs_f64(), l.as_secs()),
        None => format!("{:.2} s", elapsed.as_secs_f64()),
    };
    let (status, detail) = match outcome {
        None => ("SKIP", format!("set {DATASET_ENV} to a directory with at least 5 sequences")),
        Some(Ok(d)) if limit.is_none_or(|l| elapsed <= l) => ("PASS", d),
        Some(Ok(d)) => ("FAIL", format!("{d}; over time limit")),
        Some(Err(d)) => ("FAIL", d),
    };
    println!("{status} {id:>2} {name}: {detail} ({timing})");
    status
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let results = [
        report(1, "windowed search oracle", secs(10), || Some(windowed_search())),
        report(2, "FFT correlation oracle", secs(5), || Some(correlation())),
        report(3, "solver soundness", secs(10), || Some(solver())),
        report(4, "MRF descent", secs(20), || Some(mrf())),
        report(5, "similarity algebra", secs(1), || Some(similarity())),
        report(6, "color saliency", secs(1), || Some(css())),
        report(7, "shape fusion oracle", secs(1), || Some(fusion())),
        report(8, "metrics oracle", secs(2), || Some(metrics())),
        report(9, "synthetic tracking", secs(60), || Some(synthetic_tracking())),
        report(10, "ablation direction", None, || Some(ablation_direction())),
        report(11, "CLI determinism", secs(60), || Some(determinism())),
        report(12, "local dataset direction", None, dataset),
    ];
    let count = |s: &str| results.iter().filter(|r| **r == s).count();
    let failed = count("FAIL");
    println!("{} passed, {failed} failed, {} skipped", count("PASS"), count("SKIP"));
    if failed > 0 {
        std::process::exit(1);
    }
}
