//! Independent numerical oracles used by the test suites.
//!
//! Everything here is deliberately built from first principles — explicit
//! superoperator assembly plus a dense matrix exponential, direct pair
//! counting, textbook samplers — so it shares no code path with the
//! implementations it cross-checks.

/// Dense real square matrix as nested `Vec`s; test-only, clarity over speed.
pub type Matrix = Vec<Vec<f64>>;

/// Assemble the Lindblad superoperator for collective decay on the
/// `(n+1)`-rung ladder, acting on the flattened density matrix
/// `vec(ρ)[i·d + j] = ρ_{ij}` (ladder index 0 = ground). All entries are
/// real: `L[(i,j),(i+1,j+1)] = c_{i+1}c_{j+1}`, `L[(i,j),(i,j)] =
/// −(r_i + r_j)/2`, with `r_k = k(n−k+1)` and `c_k = sqrt(r_k)`.
pub fn liouvillian(n_atoms: usize) -> Matrix {
    let d = n_atoms + 1;
    let rate = |k: usize| (k as f64) * ((n_atoms - k + 1) as f64);
    let amp = |k: usize| rate(k).sqrt();
    let mut l = vec![vec![0.0; d * d]; d * d];
    for i in 0..d {
        for j in 0..d {
            let row = i * d + j;
            l[row][row] = -(rate(i) + rate(j)) / 2.0;
            if i + 1 < d && j + 1 < d {
                l[row][(i + 1) * d + (j + 1)] = amp(i + 1) * amp(j + 1);
            }
        }
    }
    l
}

fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let v = a[i][k];
            if v == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += v * b[k][j];
            }
        }
    }
    out
}

/// Matrix exponential by scaling-and-squaring with a Taylor series.
pub fn expm(a: &Matrix, t: f64) -> Matrix {
    let n = a.len();
    let norm: f64 = a
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = ((norm * t.abs()).log2().ceil().max(0.0)) as u32 + 1;
    let scale = t / f64::powi(2.0, squarings as i32);

    // exp(A·scale) by Taylor; ||A·scale|| ≤ 1/2 so this converges fast.
    let mut result: Matrix = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut term = result.clone();
    for order in 1..=24 {
        term = mat_mul(&term, a);
        let coeff = scale / order as f64;
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v *= coeff;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mat_mul(&result, &result);
    }
    result
}

/// Apply `exp(L t)` to a flattened complex density matrix given as
/// `(re, im)` pairs. `L` is real, so the parts propagate independently.
pub fn expm_apply(l: &Matrix, t: f64, vec_rho: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let e = expm(l, t);
    e.iter()
        .map(|row| {
            row.iter()
                .zip(vec_rho.iter())
                .fold((0.0, 0.0), |(re, im), (c, (r, i))| (re + c * r, im + c * i))
        })
        .collect()
}

/// Knuth's Poisson sampler; fine for the small means used in fixtures.
pub fn sample_poisson(mean: f64, rng: &mut impl rand::Rng) -> u32 {
    let threshold = (-mean).exp();
    let mut k = 0u32;
    let mut product = 1.0;
    loop {
        product *= rng.random::<f64>();
        if product <= threshold {
            return k;
        }
        k += 1;
    }
}

/// Least-squares fit of `y = c·x^alpha` on the linear scale, minimizing
/// `Σ(y − c·x^alpha)²` by golden-section search over `alpha` (with the
/// optimal `c` closed-form at each trial exponent).
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let sse = |alpha: f64| -> (f64, f64) {
        let num: f64 = xs.iter().zip(ys).map(|(x, y)| x.powf(alpha) * y).sum();
        let den: f64 = xs.iter().map(|x| x.powf(2.0 * alpha)).sum();
        let c = num / den;
        let err: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - c * x.powf(alpha)).powi(2))
            .sum();
        (err, c)
    };
    let (mut lo, mut hi) = (0.5, 3.5);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-10 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if sse(a).0 < sse(b).0 {
            hi = b;
        } else {
            lo = a;
        }
    }
    let alpha = (lo + hi) / 2.0;
    (sse(alpha).1, alpha)
}

/// Direct cross-channel pair count per repetition on raw
/// `(repetition, channel, time_ns)` tuples restricted to a window:
/// the combinatorial oracle for the coincidence accumulator.
pub fn cross_pair_count(
    records: &[(u64, u8, f64)],
    t_start_ns: f64,
    t_end_ns: f64,
) -> u64 {
    use std::collections::BTreeMap;
    let mut per_rep: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    for &(rep, channel, t) in records {
        if t < t_start_ns || t >= t_end_ns {
            continue;
        }
        let entry = per_rep.entry(rep).or_insert((0, 0));
        match channel {
            1 => entry.0 += 1,
            2 => entry.1 += 1,
            _ => panic!("unknown channel {channel}"),
        }
    }
    per_rep.values().map(|&(a, b)| a * b).sum()
}

/// Trapezoidal quadrature on an arbitrary grid.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
        .sum()
}
