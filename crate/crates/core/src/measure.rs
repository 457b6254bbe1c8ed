//! Finite sampling, readout confusion and its correction, and bootstrap
//! resampling.
//!
//! Randomness comes from ChaCha streams keyed by `(seed, stream id)`, so
//! each experiment, stretch factor and bootstrap replica draws from its
//! own reproducible sequence regardless of scheduling.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{apply_unitary, DensityMatrix};
use crate::error::{Error, Result};
use crate::noise::ConfusionMatrix;
use crate::pauli::{CMatrix, Pauli, PauliString, C64};

/// Largest acceptable condition number of a confusion matrix.
pub const MAX_CONFUSION_CONDITION: f64 = 1e6;
/// Fraction of failed bootstrap replicas that aborts the run.
pub const MAX_FAILED_REPLICAS: f64 = 0.1;

/// Generator for one logical stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs `(experiment, stretch index, replica)` into a stream id.
pub fn stream_id(experiment: u64, stretch: u64, replica: u64) -> u64 {
    (experiment << 44) ^ (stretch << 32) ^ replica
}

/// Per-qubit measurement basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MeasurementSetting(Vec<Pauli>);

impl MeasurementSetting {
    pub fn computational(n_qubits: usize) -> Self {
        MeasurementSetting(vec![Pauli::Z; n_qubits])
    }

    /// Bases from a string's support; identity sites are read in `Z`.
    pub fn for_string(p: &PauliString) -> Self {
        MeasurementSetting(
            p.axes()
                .iter()
                .map(|&a| if a == Pauli::I { Pauli::Z } else { a })
                .collect(),
        )
    }

    pub fn bases(&self) -> &[Pauli] {
        &self.0
    }

    pub fn label(&self) -> String {
        self.0.iter().map(|p| p.to_char()).collect()
    }

    /// Rotation taking each basis to `Z`.
    pub fn rotation(&self) -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = |v: f64| C64::new(v, 0.0);
        let h = CMatrix::from_row_slice(2, 2, &[r(s), r(s), r(s), r(-s)]);
        let sdg = CMatrix::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), C64::new(0.0, -1.0)]);
        self.0.iter().fold(CMatrix::identity(1, 1), |acc, b| {
            let local = match b {
                Pauli::X => h.clone(),
                Pauli::Y => &h * &sdg,
                _ => CMatrix::identity(2, 2),
            };
            acc.kronecker(&local)
        })
    }

    /// Outcome distribution of `rho` in this setting.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if self.0.len() != rho.n_qubits() {
            return Err(Error::usage(format!(
                "setting has {} qubits, state has {}",
                self.0.len(),
                rho.n_qubits()
            )));
        }
        if self.0.iter().all(|&b| b == Pauli::Z || b == Pauli::I) {
            return Ok(rho.probabilities());
        }
        Ok(apply_unitary(rho, &self.rotation())?.probabilities())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsTable {
    pub n_qubits: usize,
    /// `counts[k]` for outcome `k` (qubit 0 is the most significant bit).
    pub counts: Vec<u64>,
    pub setting: String,
}

impl CountsTable {
    pub fn new(n_qubits: usize, counts: Vec<u64>, setting: impl Into<String>) -> Result<Self> {
        if counts.len() != 1 << n_qubits {
            return Err(Error::usage(format!(
                "{} outcome counts for {n_qubits} qubits",
                counts.len()
            )));
        }
        Ok(CountsTable {
            n_qubits,
            counts,
            setting: setting.into(),
        })
    }

    pub fn shots(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let s = self.shots() as f64;
        self.counts.iter().map(|&c| c as f64 / s).collect()
    }

    /// Plug-in mean of the parity over `string`'s support and its variance.
    pub fn parity(&self, string: &PauliString) -> (f64, f64) {
        estimate_from_probabilities(&self.frequencies(), string, self.shots())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("outcome,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{c}\n", bitstring(k, self.n_qubits)));
        }
        out
    }

    pub fn from_csv(text: &str, setting: impl Into<String>) -> Result<Self> {
        let mut rows = Vec::new();
        let mut n_qubits = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with("outcome")) {
                continue;
            }
            let parse_err = |m: &str| Error::Parse {
                line: i + 1,
                message: m.to_string(),
            };
            let (bits, count) = line.split_once(',').ok_or_else(|| parse_err("expected outcome,count"))?;
            let bits = bits.trim();
            match n_qubits {
                None => n_qubits = Some(bits.len()),
                Some(n) if n != bits.len() => return Err(parse_err("inconsistent outcome length")),
                _ => {}
            }
            let k = usize::from_str_radix(bits, 2).map_err(|_| parse_err("outcome must be a bitstring"))?;
            let c: u64 = count.trim().parse().map_err(|_| parse_err("count must be a non-negative integer"))?;
            rows.push((k, c));
        }
        let n = n_qubits.ok_or_else(|| Error::Parse {
            line: 1,
            message: "no counts".into(),
        })?;
        let mut counts = vec![0; 1 << n];
        for (k, c) in rows {
            counts[k] += c;
        }
        CountsTable::new(n, counts, setting)
    }
}

fn bitstring(k: usize, n: usize) -> String {
    (0..n)
        .map(|q| if k >> (n - 1 - q) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Mean and variance of the mean of a parity observable under `p`.
pub fn estimate_from_probabilities(p: &[f64], string: &PauliString, shots: u64) -> (f64, f64) {
    let f: Vec<f64> = (0..p.len()).map(|k| string.outcome_sign(k)).collect();
    weighted_mean_variance(p, &f, p, shots)
}

/// Mean `Σ pₖ fₖ` and variance `(Σ qₖ fₖ² - (Σ qₖ fₖ)²)/shots`.
fn weighted_mean_variance(p: &[f64], f: &[f64], q: &[f64], shots: u64) -> (f64, f64) {
    let mean = p.iter().zip(f).map(|(a, b)| a * b).sum();
    let m1: f64 = q.iter().zip(f).map(|(a, b)| a * b).sum();
    let m2: f64 = q.iter().zip(f).map(|(a, b)| a * b * b).sum();
    (mean, ((m2 - m1 * m1) / shots as f64).max(0.0))
}

/// Multinomial draw by sequential conditional binomials.
pub fn multinomial(probabilities: &[f64], shots: u64, rng: &mut impl Rng) -> Vec<u64> {
    let clean: Vec<f64> = probabilities.iter().map(|p| p.max(0.0)).collect();
    let mut left_mass: f64 = clean.iter().sum();
    let mut left = shots;
    let mut out = vec![0u64; clean.len()];
    for (k, &p) in clean.iter().enumerate() {
        if left == 0 || left_mass <= 0.0 {
            break;
        }
        let take = if k + 1 == clean.len() {
            left
        } else {
            let q = (p / left_mass).clamp(0.0, 1.0);
            Binomial::new(left, q).expect("valid binomial").sample(rng)
        };
        out[k] = take;
        left -= take;
        left_mass -= p;
    }
    out
}

/// Samples `shots` outcomes of `rho` in `setting`.
pub fn sample_counts(
    rho: &DensityMatrix,
    setting: &MeasurementSetting,
    shots: u64,
    rng: &mut impl Rng,
) -> Result<CountsTable> {
    if shots == 0 {
        return Err(Error::usage("shots must be ≥ 1"));
    }
    let p = setting.probabilities(rho)?;
    CountsTable::new(rho.n_qubits(), multinomial(&p, shots, rng), setting.label())
}

/// Relabels every shot independently through `m`.
pub fn apply_confusion(
    counts: &CountsTable,
    m: &ConfusionMatrix,
    rng: &mut impl Rng,
) -> Result<CountsTable> {
    check_dims(counts, m)?;
    let d = counts.counts.len();
    let mut out = vec![0u64; d];
    for (truth, &n) in counts.counts.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let column: Vec<f64> = (0..d).map(|read| m.get(read, truth)).collect();
        for (read, c) in multinomial(&column, n, rng).into_iter().enumerate() {
            out[read] += c;
        }
    }
    CountsTable::new(counts.n_qubits, out, counts.setting.clone())
}

fn check_dims(counts: &CountsTable, m: &ConfusionMatrix) -> Result<()> {
    if m.n_qubits() != counts.n_qubits {
        return Err(Error::usage(format!(
            "confusion matrix is for {} qubits, counts for {}",
            m.n_qubits(),
            counts.n_qubits
        )));
    }
    Ok(())
}

fn checked_inverse(m: &ConfusionMatrix) -> Result<DMatrix<f64>> {
    let a = m.matrix();
    let sv = a.clone().singular_values();
    let cond = if sv.min() > 0.0 { sv.max() / sv.min() } else { f64::INFINITY };
    if !(cond < MAX_CONFUSION_CONDITION) {
        return Err(Error::Numerical {
            message: "confusion matrix is singular or ill-conditioned".into(),
            achieved: cond,
        });
    }
    a.try_inverse().ok_or_else(|| Error::Numerical {
        message: "confusion matrix is singular".into(),
        achieved: cond,
    })
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumulative += ui;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Solves `M p = q` for the true distribution and projects onto the
/// simplex if the solution has negative entries.
pub fn correct_readout(counts: &CountsTable, m: &ConfusionMatrix) -> Result<Vec<f64>> {
    check_dims(counts, m)?;
    let inv = checked_inverse(m)?;
    let q = DVector::from_vec(counts.frequencies());
    let p = inv * q;
    let p: Vec<f64> = p.iter().copied().collect();
    if p.iter().any(|&x| x < 0.0) {
        Ok(project_to_simplex(&p))
    } else {
        let s: f64 = p.iter().sum();
        Ok(p.iter().map(|x| x / s).collect())
    }
}

/// Readout-corrected parity estimate with variance `Var_q(f̃)/shots`,
/// `f̃ = M⁻ᵀ f`, propagated through the linear inverse.
pub fn corrected_parity(
    counts: &CountsTable,
    m: &ConfusionMatrix,
    string: &PauliString,
) -> Result<(f64, f64)> {
    let f: Vec<f64> = (0..counts.counts.len()).map(|k| string.outcome_sign(k)).collect();
    observable_estimate(counts, Some(m), &f)
}

/// Mean and variance of a diagonal observable `f` (one value per outcome),
/// readout-corrected when `m` is given.
pub fn observable_estimate(
    counts: &CountsTable,
    m: Option<&ConfusionMatrix>,
    f: &[f64],
) -> Result<(f64, f64)> {
    if f.len() != counts.counts.len() {
        return Err(Error::usage("observable length differs from outcome count"));
    }
    let q = counts.frequencies();
    let Some(m) = m else {
        return Ok(weighted_mean_variance(&q, f, &q, counts.shots()));
    };
    let p = correct_readout(counts, m)?;
    let inv = checked_inverse(m)?;
    let ft: Vec<f64> = (inv.transpose() * DVector::from_column_slice(f))
        .iter()
        .copied()
        .collect();
    let mean: f64 = p.iter().zip(f).map(|(a, b)| a * b).sum();
    let (_, var) = weighted_mean_variance(&q, &ft, &q, counts.shots());
    Ok((mean, var))
}

/// Calibration run: every basis state prepared and read `shots` times.
pub fn calibration_counts(
    m: &ConfusionMatrix,
    shots: u64,
    rng: &mut impl Rng,
) -> Result<Vec<CountsTable>> {
    let n = m.n_qubits();
    let d = 1usize << n;
    (0..d)
        .map(|truth| {
            let mut ideal = vec![0u64; d];
            ideal[truth] = shots;
            let prepared = CountsTable::new(n, ideal, format!("cal{}", bitstring(truth, n)))?;
            apply_confusion(&prepared, m, rng)
        })
        .collect()
}

/// Confusion matrix estimated from calibration tables (one per prepared
/// basis state, in order).
pub fn confusion_from_calibration(tables: &[CountsTable]) -> Result<ConfusionMatrix> {
    let n = tables
        .first()
        .ok_or_else(|| Error::usage("no calibration tables"))?
        .n_qubits;
    let d = 1usize << n;
    if tables.len() != d {
        return Err(Error::usage(format!("need {d} calibration tables, got {}", tables.len())));
    }
    let m = DMatrix::from_fn(d, d, |read, truth| tables[truth].frequencies()[read]);
    ConfusionMatrix::new(n, m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Successful replica values, sorted ascending.
    pub replicas: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub n_replicas: usize,
    pub failures: usize,
}

impl BootstrapResult {
    pub fn histogram_csv(&self, bins: usize) -> String {
        let mut out = String::from("bin_low,bin_high,count\n");
        if self.replicas.is_empty() || bins == 0 {
            return out;
        }
        let lo = self.replicas[0];
        let hi = *self.replicas.last().expect("non-empty");
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut counts = vec![0usize; bins];
        for v in &self.replicas {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        for (k, c) in counts.iter().enumerate() {
            let a = lo + width * k as f64;
            out.push_str(&format!("{a},{},{c}\n", a + width));
        }
        out
    }
}

/// Resamples every table at its own shot count.
pub fn resample(table: &CountsTable, rng: &mut impl Rng) -> CountsTable {
    let counts = multinomial(&table.frequencies(), table.shots(), rng);
    CountsTable {
        n_qubits: table.n_qubits,
        counts,
        setting: table.setting.clone(),
    }
}

/// Runs `pipeline` on `n_replicas` joint resamples of all `tables`
/// (calibration runs included). Replica `r` draws from stream `r` of
/// `seed`.
pub fn bootstrap<F>(tables: &[CountsTable], pipeline: F, n_replicas: usize, seed: u64) -> Result<BootstrapResult>
where
    F: Fn(&[CountsTable]) -> Result<f64> + Sync,
{
    if n_replicas < 2 {
        return Err(Error::usage("bootstrap needs at least 2 replicas"));
    }
    let outcomes: Vec<Option<f64>> = (0..n_replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let resampled: Vec<CountsTable> = tables.iter().map(|t| resample(t, &mut rng)).collect();
            pipeline(&resampled).ok().filter(|v| v.is_finite())
        })
        .collect();
    let mut replicas: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let failures = n_replicas - replicas.len();
    if failures as f64 > MAX_FAILED_REPLICAS * n_replicas as f64 {
        return Err(Error::Numerical {
            message: format!("{failures} of {n_replicas} bootstrap replicas failed"),
            achieved: failures as f64 / n_replicas as f64,
        });
    }
    replicas.sort_by(f64::total_cmp);
    let k = replicas.len() as f64;
    let mean = replicas.iter().sum::<f64>() / k;
    let std = if replicas.len() > 1 {
        (replicas.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(BootstrapResult {
        replicas,
        mean,
        std,
        n_replicas,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> PauliString {
        "Z".parse().unwrap()
    }

    #[test]
    fn pure_ground_state_counts() {
        let mut rng = stream_rng(1, 0);
        let c = sample_counts(&DensityMatrix::ground(1).unwrap(), &MeasurementSetting::computational(1), 1000, &mut rng)
            .unwrap();
        assert_eq!(c.counts, vec![1000, 0]);
    }

    #[test]
    fn mixed_state_is_balanced() {
        let mut rng = stream_rng(2, 0);
        let shots = 100_000;
        let c = sample_counts(
            &DensityMatrix::maximally_mixed(1).unwrap(),
            &MeasurementSetting::computational(1),
            shots,
            &mut rng,
        )
        .unwrap();
        let sigma = (0.25 / shots as f64).sqrt();
        assert!((c.frequencies()[0] - 0.5).abs() < 5.0 * sigma);
        assert_eq!(c.shots(), shots);
    }

    #[test]
    fn rotated_settings() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::pure(1, &[C64::new(s, 0.0), C64::new(s, 0.0)]).unwrap();
        let p = MeasurementSetting(vec![Pauli::X]).probabilities(&plus).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
        let plus_i = DensityMatrix::pure(1, &[C64::new(s, 0.0), C64::new(0.0, s)]).unwrap();
        let p = MeasurementSetting(vec![Pauli::Y]).probabilities(&plus_i).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_confusion_is_noop() {
        let mut rng = stream_rng(3, 0);
        let c = CountsTable::new(2, vec![10, 20, 30, 40], "ZZ").unwrap();
        let m = ConfusionMatrix::identity(2);
        assert_eq!(apply_confusion(&c, &m, &mut rng).unwrap(), c);
        assert_eq!(correct_readout(&c, &m).unwrap(), c.frequencies());
    }

    #[test]
    fn full_scrambling() {
        let mut rng = stream_rng(4, 0);
        let c = CountsTable::new(1, vec![100_000, 0], "Z").unwrap();
        let m = ConfusionMatrix::symmetric_flip(1, 0.5).unwrap();
        let out = apply_confusion(&c, &m, &mut rng).unwrap();
        let sigma = (0.25 / 1e5f64).sqrt();
        assert!((out.frequencies()[0] - 0.5).abs() < 5.0 * sigma);
    }

    #[test]
    fn simplex_projection() {
        let p = project_to_simplex(&[1.2, -0.1, -0.1]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
        assert_eq!(project_to_simplex(&[0.3, 0.7]), vec![0.3, 0.7]);
    }

    #[test]
    fn infeasible_counts_still_give_distribution() {
        let m = ConfusionMatrix::symmetric_flip(1, 0.1).unwrap();
        let c = CountsTable::new(1, vec![1000, 0], "Z").unwrap();
        let p = correct_readout(&c, &m).unwrap();
        assert!(p.iter().all(|&x| x >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_confusion_rejected() {
        let m = ConfusionMatrix::symmetric_flip(1, 0.5).unwrap();
        let c = CountsTable::new(1, vec![5, 5], "Z").unwrap();
        assert!(matches!(correct_readout(&c, &m), Err(Error::Numerical { .. })));
    }

    #[test]
    fn counts_csv_round_trip() {
        let c = CountsTable::new(2, vec![1, 0, 7, 2], "ZZ").unwrap();
        let text = c.to_csv();
        assert!(text.starts_with("outcome,count\n00,1\n"));
        assert_eq!(CountsTable::from_csv(&text, "ZZ").unwrap(), c);
    }

    #[test]
    fn deterministic_bootstrap_is_exact() {
        let t = CountsTable::new(1, vec![500, 0], "Z").unwrap();
        let r = bootstrap(&[t], |ts| Ok(ts[0].parity(&z()).0), 50, 9).unwrap();
        assert_eq!(r.std, 0.0);
        assert_eq!(r.mean, 1.0);
    }

    #[test]
    fn failing_pipeline_aborts() {
        let t = CountsTable::new(1, vec![5, 5], "Z").unwrap();
        assert!(bootstrap(&[t], |_| Err(Error::usage("boom")), 10, 0).is_err());
    }

    #[test]
    fn calibration_recovers_matrix() {
        let m = ConfusionMatrix::from_qubit_flips(&[(0.03, 0.05)]).unwrap();
        let mut rng = stream_rng(5, 0);
        let cal = calibration_counts(&m, 200_000, &mut rng).unwrap();
        let est = confusion_from_calibration(&cal).unwrap();
        assert!((est.get(1, 0) - 0.03).abs() < 0.002);
        assert!((est.get(0, 1) - 0.05).abs() < 0.002);
    }
}
