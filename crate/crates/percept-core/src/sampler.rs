//! Monte Carlo oracle: seeded ancestral sampling, empirical moments, and
//! brute-force distance estimates used to validate the analytic engine.
//!
//! # Reproducibility scheme
//!
//! The generator is ChaCha8 seeded with the user's 64-bit seed. Every
//! variable gets its own substream (stream id = the variable's declaration
//! index) and every row a fixed offset inside it (word position = 4 × row,
//! since one normal variate consumes two 64-bit draws = four 32-bit words).
//! A cell's noise value therefore depends only on `(seed, variable index,
//! row)` — never on worker count or evaluation order — so sharded sampling
//! is bit-identical to single-threaded sampling. Degenerate (variance-0)
//! cells still consume their draws, keeping the layout uniform.
//!
//! Normal variates use the Box–Muller transform:
//! `z = √(−2 ln u₁) · cos(2π u₂)` with `u₁ = ((a ≫ 11) + 1)·2⁻⁵³ ∈ (0,1]`
//! and `u₂ = (b ≫ 11)·2⁻⁵³ ∈ [0,1)` from consecutive 64-bit draws `a`, `b`.

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gaussian::{GaussianDist, Metric};
use crate::intervention::{apply_do, InterventionSpec};
use crate::scm::LinearScm;

/// A seeded draw of `n` joint observations, one column per variable in
/// declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    variables: Vec<String>,
    /// Row-major `n × p` values.
    data: Vec<f64>,
    n: usize,
    seed: u64,
}

impl SampleMatrix {
    /// Column names, matching the sampled SCM's declaration order.
    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Number of rows.
    pub fn n_rows(&self) -> usize {
        self.n
    }

    /// The seed the matrix was drawn with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// One observation (row) as a slice over all variables.
    pub fn row(&self, r: usize) -> &[f64] {
        let p = self.variables.len();
        &self.data[r * p..(r + 1) * p]
    }

    /// RFC 4180 CSV: header row of variable names, CRLF record separators,
    /// floats as shortest round-trip decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.data.len() * 8);
        for (i, name) in self.variables.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            push_csv_field(&mut out, name);
        }
        out.push_str("\r\n");
        let mut buf = ryu_buffer::Buffer::new();
        for r in 0..self.n {
            for (i, v) in self.row(r).iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(buf.format(*v));
            }
            out.push_str("\r\n");
        }
        out
    }
}

/// Shortest round-trip decimal formatting for the CSV export; `f64`'s
/// `Display` already guarantees shortest-round-trip, this wrapper only
/// normalizes integral values to keep an explicit `.0` out of headers' way.
mod ryu_buffer {
    pub struct Buffer {
        s: String,
    }

    impl Buffer {
        pub fn new() -> Self {
            Buffer { s: String::new() }
        }

        pub fn format(&mut self, v: f64) -> &str {
            use std::fmt::Write;
            self.s.clear();
            write!(self.s, "{v}").expect("writing to a String cannot fail");
            &self.s
        }
    }
}

fn push_csv_field(out: &mut String, field: &str) {
    if field.contains([',', '"', '\r', '\n']) {
        out.push('"');
        for c in field.chars() {
            if c == '"' {
                out.push('"');
            }
            out.push(c);
        }
        out.push('"');
    } else {
        out.push_str(field);
    }
}

/// One standard-normal variate from two consecutive 64-bit draws.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let a = rng.next_u64();
    let b = rng.next_u64();
    let u1 = ((a >> 11) + 1) as f64 * (1.0 / 9007199254740992.0);
    let u2 = (b >> 11) as f64 * (1.0 / 9007199254740992.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Draws `n` ancestral samples single-threaded. Equivalent to
/// [`sample_with_workers`] with one worker — and, by construction, with any
/// other worker count.
pub fn sample(scm: &LinearScm, n: usize, seed: u64) -> SampleMatrix {
    sample_with_workers(scm, n, seed, 1)
}

/// Draws `n` ancestral samples with rows sharded across `workers` threads.
///
/// Output is bit-identical for every worker count (see the module docs for
/// the substream scheme). `workers = 0` is treated as 1.
pub fn sample_with_workers(scm: &LinearScm, n: usize, seed: u64, workers: usize) -> SampleMatrix {
    let graph = scm.graph();
    let p = graph.node_count();
    let mut data = vec![0.0f64; n * p];
    let workers = workers.max(1).min(n.max(1));
    let chunk_rows = n.div_ceil(workers);

    let noise_mean = scm.noise_mean_slice();
    let noise_sd: Vec<f64> = scm.noise_var_slice().iter().map(|v| v.sqrt()).collect();
    let parent_coefs = scm.parent_coefficients();
    let topo = graph.topo_indices();

    let fill_chunk = |chunk: &mut [f64], first_row: usize| {
        let rows = chunk.len() / p;
        // Noise pass: per-variable substream, positioned at this chunk's rows.
        for j in 0..p {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            rng.set_word_pos((4 * first_row) as u128);
            for r in 0..rows {
                let z = standard_normal(&mut rng);
                chunk[r * p + j] = noise_mean[j] + noise_sd[j] * z;
            }
        }
        // Structural pass: accumulate parent contributions in topological
        // order; parents are final before any child reads them.
        for r in 0..rows {
            let row = &mut chunk[r * p..(r + 1) * p];
            for &j in topo {
                let mut acc = row[j];
                for &(par, alpha) in &parent_coefs[j] {
                    acc += alpha * row[par];
                }
                row[j] = acc;
            }
        }
    };

    if workers == 1 {
        fill_chunk(&mut data, 0);
    } else {
        std::thread::scope(|scope| {
            let mut rest = data.as_mut_slice();
            let mut first_row = 0usize;
            while !rest.is_empty() {
                let take = (chunk_rows * p).min(rest.len());
                let (chunk, tail) = rest.split_at_mut(take);
                scope.spawn(move || fill_chunk(chunk, first_row));
                first_row += take / p;
                rest = tail;
            }
        });
    }

    SampleMatrix {
        variables: graph.nodes().to_vec(),
        data,
        n,
        seed,
    }
}

/// Column means and the unbiased (`n − 1`) sample covariance, computed in two
/// passes for numerical stability.
///
/// # Errors
///
/// [`Error::TooFewRows`] when the matrix has fewer than 2 rows.
pub fn empirical_moments(samples: &SampleMatrix) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = samples.n;
    if n < 2 {
        return Err(Error::TooFewRows { n });
    }
    let p = samples.variables.len();
    let mut mean = DVector::<f64>::zeros(p);
    for r in 0..n {
        for (j, v) in samples.row(r).iter().enumerate() {
            mean[j] += v;
        }
    }
    mean /= n as f64;

    let mut cov = DMatrix::<f64>::zeros(p, p);
    let mut centered = vec![0.0f64; p];
    for r in 0..n {
        for (j, v) in samples.row(r).iter().enumerate() {
            centered[j] = v - mean[j];
        }
        for i in 0..p {
            for j in i..p {
                cov[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..p {
        for j in i..p {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok((mean, cov))
}

/// Fits a Gaussian to the samples' empirical moments.
///
/// # Errors
///
/// [`Error::TooFewRows`] when the matrix has fewer than 2 rows.
pub fn empirical_distribution(samples: &SampleMatrix) -> Result<GaussianDist> {
    let (mean, cov) = empirical_moments(samples)?;
    GaussianDist::new(samples.variables.to_vec(), mean, cov)
}

/// Brute-force estimate of the per-intervention distance between two SCMs:
/// applies `spec` to both, samples both with the same seed (common random
/// numbers), fits Gaussians to the shared-variable marginals, and returns the
/// metric distance between the fits.
///
/// # Errors
///
/// [`Error::NoSharedVariables`] when the SCMs share no variable names;
/// [`Error::UnknownTarget`] when `spec` targets a variable missing from
/// either SCM; [`Error::TooFewRows`] for `n < 2`; metric errors propagate.
pub fn mc_distance(
    scm_a: &LinearScm,
    scm_b: &LinearScm,
    spec: &InterventionSpec,
    n: usize,
    seed: u64,
    metric: Metric,
) -> Result<f64> {
    let shared: Vec<&str> = scm_a
        .graph()
        .nodes()
        .iter()
        .filter(|v| scm_b.graph().contains(v))
        .map(String::as_str)
        .collect();
    if shared.is_empty() {
        return Err(Error::NoSharedVariables);
    }
    let fit = |scm: &LinearScm| -> Result<GaussianDist> {
        let cut = apply_do(scm, spec)?;
        let samples = sample(&cut, n, seed);
        empirical_distribution(&samples)?.marginal(&shared)
    };
    metric.distance(&fit(scm_a)?, &fit(scm_b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::graph_from_strs;
    use crate::scm::test_support::{admissions_r1_scm, admissions_r2_scm};
    use approx::assert_abs_diff_eq;

    fn deterministic_chain() -> LinearScm {
        let g = graph_from_strs(&["A", "B"], &[("A", "B")]).unwrap();
        LinearScm::new(g, &[("A", "B", 2.0)], &[("A", 1.0, 0.0), ("B", 0.5, 0.0)]).unwrap()
    }

    #[test]
    fn zero_variance_system_reproduces_the_mean_every_row() {
        let scm = deterministic_chain();
        let s = sample(&scm, 8, 42);
        for r in 0..8 {
            assert_eq!(s.row(r), &[1.0, 2.5]);
        }
    }

    #[test]
    fn same_seed_gives_identical_matrices() {
        let scm = admissions_r1_scm();
        assert_eq!(sample(&scm, 100, 7), sample(&scm, 100, 7));
        assert_ne!(sample(&scm, 100, 7), sample(&scm, 100, 8));
    }

    #[test]
    fn worker_count_does_not_change_the_bytes() {
        let scm = admissions_r1_scm();
        let single = sample_with_workers(&scm, 101, 9, 1);
        for workers in [2, 3, 4, 7, 101, 200] {
            assert_eq!(single, sample_with_workers(&scm, 101, 9, workers));
        }
    }

    #[test]
    fn single_node_standard_normal_mean_is_near_zero() {
        let g = graph_from_strs(&["A"], &[]).unwrap();
        let scm = LinearScm::new(g, &[], &[("A", 0.0, 1.0)]).unwrap();
        let s = sample(&scm, 1_000_000, 20260816);
        let (mean, cov) = empirical_moments(&s).unwrap();
        assert!(mean[0].abs() < 0.004, "mean {} exceeds 3σ bound", mean[0]);
        assert!((cov[(0, 0)] - 1.0).abs() < 0.005);
    }

    #[test]
    fn empirical_moments_hand_case() {
        let s = SampleMatrix {
            variables: vec!["A".into()],
            data: vec![0.0, 2.0],
            n: 2,
            seed: 0,
        };
        let (mean, cov) = empirical_moments(&s).unwrap();
        assert_eq!(mean[0], 1.0);
        assert_eq!(cov[(0, 0)], 2.0);
    }

    #[test]
    fn constant_columns_have_zero_covariance() {
        let scm = deterministic_chain();
        let (_, cov) = empirical_moments(&sample(&scm, 16, 3)).unwrap();
        assert_eq!(cov, DMatrix::zeros(2, 2));
    }

    #[test]
    fn too_few_rows_is_rejected() {
        let scm = deterministic_chain();
        let one = sample(&scm, 1, 0);
        assert_eq!(
            empirical_moments(&one).unwrap_err(),
            Error::TooFewRows { n: 1 }
        );
    }

    #[test]
    fn sampler_moments_match_analytic_admissions_model() {
        let scm = admissions_r1_scm();
        let s = sample(&scm, 200_000, 11);
        let (mean, cov) = empirical_moments(&s).unwrap();
        let d = scm.implied_distribution();
        let se = |var: f64| 3.0 * (var / 200_000f64).sqrt();
        for j in 0..4 {
            let v = d.cov()[(j, j)];
            assert!(
                (mean[j] - d.mean()[j]).abs() < se(v),
                "mean of column {j} off"
            );
            // Variance estimator SE ≈ var·√(2/n); use a 4σ-ish cushion.
            assert!((cov[(j, j)] - v).abs() < 4.0 * v * (2.0 / 200_000f64).sqrt());
        }
    }

    #[test]
    fn mc_distance_of_identical_models_is_small() {
        let scm = admissions_r1_scm();
        let d = mc_distance(
            &scm,
            &scm,
            &InterventionSpec::null(),
            100_000,
            5,
            Metric::W2,
        )
        .unwrap();
        assert!(d < 0.02, "self-distance {d} too large");
    }

    #[test]
    fn mc_distance_detects_the_do_z_mean_gap() {
        let a = admissions_r1_scm();
        let b = admissions_r2_scm();
        let spec = InterventionSpec::new(&[("Z", 1.0)]).unwrap();
        let analytic = {
            let pa = apply_do(&a, &spec).unwrap().implied_distribution();
            let pb = apply_do(&b, &spec).unwrap().implied_distribution();
            crate::gaussian::wasserstein2(
                &pa.marginal(&["X1"]).unwrap(),
                &pb.marginal(&["X1"]).unwrap(),
            )
            .unwrap()
        };
        // Under do(Z=1) the X1 means are 0.95 vs 0.15; variances match, so
        // the X1-marginal W2 is exactly the mean gap 0.8.
        assert_abs_diff_eq!(analytic, 0.8, epsilon = 1e-12);
        let mc = {
            let pa = apply_do(&a, &spec).unwrap();
            let pb = apply_do(&b, &spec).unwrap();
            let sa = empirical_distribution(&sample(&pa, 200_000, 13)).unwrap();
            let sb = empirical_distribution(&sample(&pb, 200_000, 13)).unwrap();
            crate::gaussian::wasserstein2(
                &sa.marginal(&["X1"]).unwrap(),
                &sb.marginal(&["X1"]).unwrap(),
            )
            .unwrap()
        };
        assert!(
            (mc - analytic).abs() / analytic < 0.05,
            "mc {mc} vs {analytic}"
        );
    }

    #[test]
    fn mc_distance_requires_shared_variables() {
        let ga = graph_from_strs(&["A"], &[]).unwrap();
        let gb = graph_from_strs(&["B"], &[]).unwrap();
        let a = LinearScm::new(ga, &[], &[("A", 0.0, 1.0)]).unwrap();
        let b = LinearScm::new(gb, &[], &[("B", 0.0, 1.0)]).unwrap();
        assert_eq!(
            mc_distance(&a, &b, &InterventionSpec::null(), 10, 0, Metric::W2).unwrap_err(),
            Error::NoSharedVariables
        );
    }

    #[test]
    fn csv_export_shape_and_quoting() {
        let scm = deterministic_chain();
        let csv = sample(&scm, 2, 0).to_csv();
        assert_eq!(csv, "A,B\r\n1,2.5\r\n1,2.5\r\n");

        let g = graph_from_strs(&["weird,name"], &[]).unwrap();
        let s = sample(
            &LinearScm::new(g, &[], &[("weird,name", 0.0, 0.0)]).unwrap(),
            1,
            0,
        );
        assert!(s.to_csv().starts_with("\"weird,name\"\r\n"));
    }

    #[test]
    fn box_muller_outputs_are_finite_and_plausible() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for _ in 0..10_000 {
            let z = standard_normal(&mut rng);
            assert!(z.is_finite());
            min = min.min(z);
            max = max.max(z);
        }
        assert!(min < -2.5 && max > 2.5, "tails unexplored: [{min}, {max}]");
    }
}
