//! The decision problem: codebook × grouped RIS configurations, the
//! flattened channel observation, and the SINR / sum-rate reward.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    amplitude_attenuation, panel_shape, CMatrix, ChannelModel, ChannelSet, Complex, Geometry,
    Position3D, RiceanParams,
};
use crate::error::{Error, Result};

/// Largest action space [`exhaustive_best`] will enumerate.
pub const MAX_ENUMERATION: usize = 1 << 20;

/// Physical layout and link-budget parameters of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub bs: Position3D,
    pub ris: Vec<Position3D>,
    pub ues: Vec<Position3D>,
    pub bs_antennas: usize,
    /// `N_tot`, the element count summed over all surfaces.
    pub ris_elements_total: usize,
    pub n_group: usize,
    pub kappa1_db: f64,
    pub kappa2_db: f64,
    pub carrier_hz: f64,
    pub power_dbm: f64,
    /// Noise power per UE.
    pub noise_dbm: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            bs: Position3D::new(10.0, 5.0, 2.0),
            ris: vec![
                Position3D::new(7.5, 13.0, 2.0),
                Position3D::new(12.5, 13.0, 2.0),
            ],
            ues: vec![
                Position3D::new(8.775, 14.394, 1.634),
                Position3D::new(9.648, 13.281, 1.632),
            ],
            bs_antennas: 4,
            ris_elements_total: 32,
            n_group: 16,
            kappa1_db: 30.0,
            kappa2_db: 30.0,
            carrier_hz: 35e9,
            power_dbm: 40.0,
            noise_dbm: -110.0,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry()?.validate()?;
        self.ricean().validate()?;
        if self.n_group == 0 {
            return Err(Error::Config("n_group must be >= 1".into()));
        }
        if self.ris_elements_total % self.ris.len() != 0 {
            return Err(Error::Config(format!(
                "ris_elements_total = {} is not divisible by the number of surfaces ({})",
                self.ris_elements_total,
                self.ris.len()
            )));
        }
        if self.ris_elements_total % self.n_group != 0 {
            return Err(Error::Config(format!(
                "n_group = {} does not divide ris_elements_total = {}",
                self.n_group, self.ris_elements_total
            )));
        }
        if self.bs_antennas % self.ues.len() != 0 {
            return Err(Error::Config(format!(
                "bs_antennas = {} is not divisible by the number of UEs ({})",
                self.bs_antennas,
                self.ues.len()
            )));
        }
        if !self.power_dbm.is_finite() || !self.noise_dbm.is_finite() {
            return Err(Error::Config(
                "power_dbm and noise_dbm must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn elements_per_ris(&self) -> usize {
        self.ris_elements_total / self.ris.len().max(1)
    }

    /// `N̂`, the number of independently controlled groups.
    pub fn n_hat(&self) -> usize {
        self.ris_elements_total / self.n_group.max(1)
    }

    pub fn geometry(&self) -> Result<Geometry> {
        if self.ris.is_empty() {
            return Err(Error::Config("at least one RIS is required".into()));
        }
        if self.ris_elements_total == 0 {
            return Err(Error::Config("ris_elements_total must be >= 1".into()));
        }
        let (ris_rows, ris_cols) = panel_shape(self.elements_per_ris())?;
        Ok(Geometry {
            bs: self.bs,
            ris: self.ris.clone(),
            ues: self.ues.clone(),
            bs_antennas: self.bs_antennas,
            ris_rows,
            ris_cols,
        })
    }

    pub fn ricean(&self) -> RiceanParams {
        RiceanParams {
            kappa1_db: self.kappa1_db,
            kappa2_db: self.kappa2_db,
            carrier_hz: self.carrier_hz,
        }
    }

    /// `K·σ²/P` with both powers converted from dBm to milliwatts.
    pub fn noise_term(&self) -> f64 {
        let sigma2 = 10f64.powf(self.noise_dbm / 10.0);
        let power = 10f64.powf(self.power_dbm / 10.0);
        self.ues.len() as f64 * sigma2 / power
    }
}

/// Candidate precoding matrices, each `N_T × K` with unit-norm columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderCodebook {
    pub matrices: Vec<CMatrix>,
    /// `choices[i][k]` is the DFT column used for UE `k` in matrix `i`.
    pub choices: Vec<Vec<usize>>,
}

impl PrecoderCodebook {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

/// Unit-column DFT codebook. UE `k` picks its column from the `k`-th
/// contiguous block of `n_t / k_ues` DFT columns; the codebook is the
/// Cartesian product of the per-UE choices with UE 0 most significant.
pub fn build_codebook(n_t: usize, k_ues: usize) -> Result<PrecoderCodebook> {
    if k_ues == 0 || n_t < k_ues || n_t % k_ues != 0 {
        return Err(Error::Config(format!(
            "cannot split {n_t} DFT columns evenly among {k_ues} UEs"
        )));
    }
    let scale = 1.0 / (n_t as f64).sqrt();
    let dft = CMatrix::from_fn(n_t, n_t, |i, j| {
        Complex::from_polar(scale, -2.0 * PI * (i * j) as f64 / n_t as f64)
    });
    let per_ue = n_t / k_ues;
    let total = per_ue
        .checked_pow(k_ues as u32)
        .ok_or_else(|| Error::Config("codebook cardinality overflows".into()))?;

    let mut matrices = Vec::with_capacity(total);
    let mut choices = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let mut cols = vec![0; k_ues];
        for k in (0..k_ues).rev() {
            cols[k] = k * per_ue + rem % per_ue;
            rem /= per_ue;
        }
        matrices.push(CMatrix::from_fn(n_t, k_ues, |i, k| dft.get(i, cols[k])));
        choices.push(cols);
    }
    Ok(PrecoderCodebook { matrices, choices })
}

/// Precoder index plus one control bit per RIS element group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Action {
    pub precoder_idx: usize,
    pub theta_groups: Vec<bool>,
}

/// Bijection between [`Action`]s and `0..cardinality`:
/// `index = precoder_idx · 2^N̂ + bits`, with `theta_groups[0]` the most
/// significant bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionSpace {
    codebook_len: usize,
    n_hat: usize,
    cardinality: usize,
}

impl ActionSpace {
    pub fn new(codebook_len: usize, n_hat: usize) -> Result<Self> {
        let configs = u32::try_from(n_hat)
            .ok()
            .and_then(|n| 1usize.checked_shl(n))
            .filter(|_| n_hat < usize::BITS as usize);
        let cardinality = configs
            .and_then(|c| c.checked_mul(codebook_len))
            .ok_or_else(|| {
                Error::Config(format!(
                    "action space with {codebook_len} precoders and {n_hat} groups overflows the index width"
                ))
            })?;
        if cardinality == 0 {
            return Err(Error::Config("action space is empty".into()));
        }
        Ok(Self {
            codebook_len,
            n_hat,
            cardinality,
        })
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn n_hat(&self) -> usize {
        self.n_hat
    }

    pub fn codebook_len(&self) -> usize {
        self.codebook_len
    }

    pub fn encode(&self, action: &Action) -> Result<usize> {
        if action.precoder_idx >= self.codebook_len {
            return Err(Error::IndexOutOfRange {
                index: action.precoder_idx,
                len: self.codebook_len,
            });
        }
        if action.theta_groups.len() != self.n_hat {
            return Err(Error::Shape(format!(
                "expected {} group bits, got {}",
                self.n_hat,
                action.theta_groups.len()
            )));
        }
        let bits = action
            .theta_groups
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | b as usize);
        Ok((action.precoder_idx << self.n_hat) | bits)
    }

    pub fn decode(&self, index: usize) -> Result<Action> {
        if index >= self.cardinality {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.cardinality,
            });
        }
        let bits = index & ((1usize << self.n_hat) - 1);
        let theta_groups = (0..self.n_hat)
            .map(|i| (bits >> (self.n_hat - 1 - i)) & 1 == 1)
            .collect();
        Ok(Action {
            precoder_idx: index >> self.n_hat,
            theta_groups,
        })
    }
}

pub fn build_action_space(cfg: &SystemConfig) -> Result<ActionSpace> {
    cfg.validate()?;
    let codebook = build_codebook(cfg.bs_antennas, cfg.ues.len())?;
    ActionSpace::new(codebook.len(), cfg.n_hat())
}

/// Per-surface reflection vectors `φ_m`. Groups are contiguous in the global
/// element order (surface 0 first); a set bit reflects with phase `π`.
pub fn expand_groups(
    theta_groups: &[bool],
    num_ris: usize,
    elements_per_ris: usize,
    n_group: usize,
) -> Result<Vec<Vec<Complex>>> {
    let total = num_ris * elements_per_ris;
    if n_group == 0 || total % n_group != 0 || theta_groups.len() != total / n_group {
        return Err(Error::Shape(format!(
            "{} group bits do not match {total} elements in groups of {n_group}",
            theta_groups.len()
        )));
    }
    Ok((0..num_ris)
        .map(|m| {
            (0..elements_per_ris)
                .map(|e| {
                    if theta_groups[(m * elements_per_ris + e) / n_group] {
                        Complex::new(-1.0, 0.0)
                    } else {
                        Complex::new(1.0, 0.0)
                    }
                })
                .collect()
        })
        .collect())
}

/// `b_k = Σ_m A(d_m)·A(d_{m,k})·g_{m,k}·diag(φ_m)·H_m` for every UE.
pub fn end_to_end_channel(
    ch: &ChannelSet,
    reflections: &[Vec<Complex>],
    wavelength: f64,
) -> Result<Vec<Vec<Complex>>> {
    if reflections.len() != ch.h.len() || ch.g.len() != ch.h.len() {
        return Err(Error::Shape(format!(
            "{} reflection vectors for {} surfaces",
            reflections.len(),
            ch.h.len()
        )));
    }
    let num_ues = ch.g.first().map_or(0, Vec::len);
    let n_t = ch.h.first().map_or(0, |h| h.cols);
    let mut out = vec![vec![Complex::new(0.0, 0.0); n_t]; num_ues];
    for (m, h) in ch.h.iter().enumerate() {
        if h.cols != n_t || reflections[m].len() != h.rows || ch.g[m].len() != num_ues {
            return Err(Error::Shape(format!(
                "surface {m} has inconsistent dimensions"
            )));
        }
        let a_m = amplitude_attenuation(ch.d_bs_ris[m], wavelength)?;
        for (k, b) in out.iter_mut().enumerate() {
            let g = &ch.g[m][k];
            if g.len() != h.rows {
                return Err(Error::Shape(format!(
                    "g[{m}][{k}] has length {}, expected {}",
                    g.len(),
                    h.rows
                )));
            }
            let scale = a_m * amplitude_attenuation(ch.d_ris_ue[m][k], wavelength)?;
            for e in 0..h.rows {
                let w = g[e] * reflections[m][e] * scale;
                for (bj, hj) in b.iter_mut().zip(h.row(e)) {
                    *bj += w * hj;
                }
            }
        }
    }
    Ok(out)
}

fn inner(b: &[Complex], v: &CMatrix, col: usize) -> Complex {
    b.iter().enumerate().map(|(j, bj)| bj * v.get(j, col)).sum()
}

/// `|b_k·v_k|² / (Σ_{i≠k} |b_k·v_i|² + K·σ²/P)`.
pub fn sinr(b: &[Vec<Complex>], precoder: &CMatrix, k: usize, noise_term: f64) -> Result<f64> {
    let bk = b.get(k).ok_or(Error::IndexOutOfRange {
        index: k,
        len: b.len(),
    })?;
    if bk.len() != precoder.rows {
        return Err(Error::Shape(format!(
            "channel length {} vs precoder rows {}",
            bk.len(),
            precoder.rows
        )));
    }
    let signal = inner(bk, precoder, k).norm_sqr();
    let interference: f64 = (0..precoder.cols)
        .filter(|&i| i != k)
        .map(|i| inner(bk, precoder, i).norm_sqr())
        .sum();
    Ok(signal / (interference + noise_term))
}

/// `Σ_k log2(1 + SINR_k)` in bits/s/Hz.
pub fn sum_rate(b: &[Vec<Complex>], precoder: &CMatrix, noise_term: f64) -> Result<f64> {
    (0..b.len())
        .map(|k| sinr(b, precoder, k, noise_term).map(|s| (1.0 + s).log2()))
        .sum()
}

/// Flattened real observation of a channel set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Row-vectorised `H_1..H_M`, then `g_{1,1}..g_{M,K}`, each complex entry
/// split into adjacent `(re, im)`.
pub fn flatten_state(ch: &ChannelSet) -> StateVector {
    let cap = 2
        * (ch.h.iter().map(|h| h.data.len()).sum::<usize>()
            + ch.g.iter().flatten().map(Vec::len).sum::<usize>());
    let mut values = Vec::with_capacity(cap);
    let entries =
        ch.h.iter()
            .flat_map(|h| h.data.iter())
            .chain(ch.g.iter().flatten().flatten());
    for c in entries {
        values.push(c.re);
        values.push(c.im);
    }
    StateVector(values)
}

/// A configured scenario: channel model, codebook and action space.
#[derive(Debug, Clone)]
pub struct Environment {
    cfg: SystemConfig,
    model: ChannelModel,
    codebook: PrecoderCodebook,
    space: ActionSpace,
    noise_term: f64,
}

impl Environment {
    pub fn new(cfg: SystemConfig) -> Result<Self> {
        cfg.validate()?;
        let model = ChannelModel::new(cfg.geometry()?, cfg.ricean())?;
        let codebook = build_codebook(cfg.bs_antennas, cfg.ues.len())?;
        let space = ActionSpace::new(codebook.len(), cfg.n_hat())?;
        let noise_term = cfg.noise_term();
        Ok(Self {
            cfg,
            model,
            codebook,
            space,
            noise_term,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn codebook(&self) -> &PrecoderCodebook {
        &self.codebook
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn noise_term(&self) -> f64 {
        self.noise_term
    }

    /// `2·M·N·(N_T + K)`.
    pub fn state_len(&self) -> usize {
        2 * self.cfg.ris_elements_total * (self.cfg.bs_antennas + self.cfg.ues.len())
    }

    pub fn reflections(&self, action: &Action) -> Result<Vec<Vec<Complex>>> {
        expand_groups(
            &action.theta_groups,
            self.cfg.ris.len(),
            self.cfg.elements_per_ris(),
            self.cfg.n_group,
        )
    }

    pub fn end_to_end(&self, ch: &ChannelSet, action: &Action) -> Result<Vec<Vec<Complex>>> {
        end_to_end_channel(
            ch,
            &self.reflections(action)?,
            self.model.params().wavelength(),
        )
    }

    /// Sum rate of `action` evaluated directly from the end-to-end channel.
    pub fn sum_rate(&self, ch: &ChannelSet, action: &Action) -> Result<f64> {
        let precoder =
            self.codebook
                .matrices
                .get(action.precoder_idx)
                .ok_or(Error::IndexOutOfRange {
                    index: action.precoder_idx,
                    len: self.codebook.len(),
                })?;
        sum_rate(&self.end_to_end(ch, action)?, precoder, self.noise_term)
    }

    /// Wraps an existing realization as a [`Step`].
    pub fn observe(&self, channel: ChannelSet) -> Result<Step<'_>> {
        Step::new(self, channel)
    }

    /// Draws a fresh coherence block.
    pub fn step<R: Rng + ?Sized>(&self, rng: &mut R) -> Step<'_> {
        let channel = self.model.sample(rng);
        Step::new(self, channel).expect("sampled channel matches the environment shape")
    }
}

/// One coherence block together with a pure reward oracle over actions.
///
/// The per-group partial channels `c_{k,g}` are precomputed so that
/// `b_k = Σ_g ±c_{k,g}` and every reward query is cheap.
#[derive(Debug, Clone)]
pub struct Step<'a> {
    env: &'a Environment,
    pub channel: ChannelSet,
    pub state: StateVector,
    /// `proj[k][p][i][g] = c_{k,g} · V_p[:, i]`.
    proj: Vec<Vec<Vec<Vec<Complex>>>>,
}

impl<'a> Step<'a> {
    fn new(env: &'a Environment, channel: ChannelSet) -> Result<Self> {
        let cfg = &env.cfg;
        let (num_ues, n_t, per_ris) = (cfg.ues.len(), cfg.bs_antennas, cfg.elements_per_ris());
        let n_hat = cfg.n_hat();
        if channel.h.len() != cfg.ris.len()
            || channel.h.iter().any(|h| h.rows != per_ris || h.cols != n_t)
            || channel.g.len() != cfg.ris.len()
            || channel
                .g
                .iter()
                .any(|per| per.len() != num_ues || per.iter().any(|g| g.len() != per_ris))
        {
            return Err(Error::Shape(
                "channel set does not match the configuration".into(),
            ));
        }
        let lambda = env.model.params().wavelength();
        let mut groups = vec![vec![vec![Complex::new(0.0, 0.0); n_t]; n_hat]; num_ues];
        for (m, h) in channel.h.iter().enumerate() {
            let a_m = amplitude_attenuation(channel.d_bs_ris[m], lambda)?;
            for (k, per_group) in groups.iter_mut().enumerate() {
                let scale = a_m * amplitude_attenuation(channel.d_ris_ue[m][k], lambda)?;
                let g = &channel.g[m][k];
                for e in 0..per_ris {
                    let w = g[e] * scale;
                    let acc = &mut per_group[(m * per_ris + e) / cfg.n_group];
                    for (c, hj) in acc.iter_mut().zip(h.row(e)) {
                        *c += w * hj;
                    }
                }
            }
        }
        let proj = groups
            .iter()
            .map(|per_group| {
                env.codebook
                    .matrices
                    .iter()
                    .map(|v| {
                        (0..num_ues)
                            .map(|i| per_group.iter().map(|c| inner(c, v, i)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let state = flatten_state(&channel);
        Ok(Self {
            env,
            channel,
            state,
            proj,
        })
    }

    pub fn env(&self) -> &'a Environment {
        self.env
    }

    /// Sum rate of the action with index `action_idx`. Panics on an index
    /// outside the action space.
    pub fn reward(&self, action_idx: usize) -> f64 {
        let space = &self.env.space;
        assert!(
            action_idx < space.cardinality(),
            "action index out of range"
        );
        let n_hat = space.n_hat();
        let precoder = action_idx >> n_hat;
        let bits = action_idx & ((1usize << n_hat) - 1);
        let noise = self.env.noise_term;
        let num_ues = self.proj.len();
        let mut total = 0.0;
        for k in 0..num_ues {
            let per_col = &self.proj[k][precoder];
            let mut signal = 0.0;
            let mut interference = 0.0;
            for (i, per_group) in per_col.iter().enumerate() {
                let mut y = Complex::new(0.0, 0.0);
                for (g, c) in per_group.iter().enumerate() {
                    if (bits >> (n_hat - 1 - g)) & 1 == 1 {
                        y -= c;
                    } else {
                        y += c;
                    }
                }
                if i == k {
                    signal = y.norm_sqr();
                } else {
                    interference += y.norm_sqr();
                }
            }
            total += (1.0 + signal / (interference + noise)).log2();
        }
        total
    }

    /// Exhaustive search; ties resolve to the lowest index.
    pub fn best(&self) -> Result<(usize, f64)> {
        let n = self.env.space.cardinality();
        if n > MAX_ENUMERATION {
            return Err(Error::EnumerationTooLarge {
                cardinality: n,
                limit: MAX_ENUMERATION,
            });
        }
        let mut best = (0, self.reward(0));
        for idx in 1..n {
            let r = self.reward(idx);
            if r > best.1 {
                best = (idx, r);
            }
        }
        Ok(best)
    }
}

/// The action maximizing the sum rate on `ch`, and that rate.
pub fn exhaustive_best(env: &Environment, ch: &ChannelSet) -> Result<(Action, f64)> {
    let step = env.observe(ch.clone())?;
    let (idx, value) = step.best()?;
    Ok((env.space.decode(idx)?, value))
}
