//! Geometry-driven Ricean channel model for the BS→RIS and RIS→UE links.
//!
//! Conventions used throughout:
//! - half-wavelength element spacing, phase reference at element 0;
//! - steering vectors use the `exp(-jπ …)` sign;
//! - the BS is a uniform linear array along its local x-axis;
//! - each RIS is an `n_h × n_v` uniform planar array whose element ordering
//!   is the Kronecker product `horizontal ⊗ vertical`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Position3D {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Self { x, y, z }
    }
}

impl From<Position3D> for [f64; 3] {
    fn from(p: Position3D) -> Self {
        [p.x, p.y, p.z]
    }
}

/// Placement of the base station, the surfaces and the users.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub bs: Position3D,
    pub ris: Vec<Position3D>,
    pub ues: Vec<Position3D>,
    pub bs_antennas: usize,
    pub ris_rows: usize,
    pub ris_cols: usize,
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        if self.ris.is_empty() {
            return Err(Error::Config("at least one RIS is required".into()));
        }
        if self.ues.is_empty() {
            return Err(Error::Config("at least one UE is required".into()));
        }
        if self.bs_antennas == 0 {
            return Err(Error::Config("bs_antennas must be >= 1".into()));
        }
        if self.ris_rows == 0 || self.ris_cols == 0 {
            return Err(Error::Config(format!(
                "RIS panel must have positive dimensions, got {}x{}",
                self.ris_rows, self.ris_cols
            )));
        }
        let all = std::iter::once(&self.bs).chain(&self.ris).chain(&self.ues);
        if all.into_iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("all coordinates must be finite".into()));
        }
        Ok(())
    }

    pub fn num_ris(&self) -> usize {
        self.ris.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ues.len()
    }

    /// Elements per surface, `N = N_h · N_v`.
    pub fn ris_elements(&self) -> usize {
        self.ris_rows * self.ris_cols
    }
}

/// Panel aspect for `n` elements per surface.
///
/// Square when `n` is a perfect square. Otherwise the column count is the
/// largest power of two not exceeding `√n` that divides `n`.
pub fn panel_shape(n: usize) -> Result<(usize, usize)> {
    if n == 0 {
        return Err(Error::Config("RIS must have at least one element".into()));
    }
    let root = (n as f64).sqrt().round() as usize;
    if root * root == n {
        return Ok((root, root));
    }
    let mut cols = 1;
    while (cols * 2) * (cols * 2) <= n {
        cols *= 2;
    }
    while n % cols != 0 {
        cols /= 2;
    }
    Ok((n / cols, cols))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiceanParams {
    pub kappa1_db: f64,
    pub kappa2_db: f64,
    pub carrier_hz: f64,
}

impl RiceanParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return Err(Error::Config(format!(
                "carrier_hz must be positive, got {}",
                self.carrier_hz
            )));
        }
        if self.kappa1_db.is_nan() || self.kappa2_db.is_nan() {
            return Err(Error::Config("Ricean factors must not be NaN".into()));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn kappa1(&self) -> f64 {
        db_to_linear(self.kappa1_db)
    }

    pub fn kappa2(&self) -> f64 {
        db_to_linear(self.kappa2_db)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `(LOS, NLOS)` amplitude weights `(√(κ/(κ+1)), √(1/(κ+1)))` for a linear
/// Ricean factor. An infinite factor yields the pure LOS limit `(1, 0)`.
pub fn ricean_weights(kappa: f64) -> (f64, f64) {
    if kappa.is_infinite() {
        (1.0, 0.0)
    } else {
        ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt())
    }
}

/// Free-space pathloss `20·log10(4πd/λ)` in dB.
pub fn pathloss_db(d: f64, lambda: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("distance must be positive, got {d}")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "wavelength must be positive, got {lambda}"
        )));
    }
    Ok(20.0 * (4.0 * PI * d / lambda).log10())
}

/// Per-hop amplitude factor `10^(-L/20)` for the pathloss `L` in dB.
pub fn amplitude_attenuation(d: f64, lambda: f64) -> Result<f64> {
    Ok(10f64.powf(-pathloss_db(d, lambda)? / 20.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angles {
    pub azimuth: f64,
    pub elevation: f64,
    pub distance: f64,
}

pub fn angles_between(from: Position3D, to: Position3D) -> Result<Angles> {
    let (dx, dy, dz) = (to.x - from.x, to.y - from.y, to.z - from.z);
    let distance = (dx * dx + dy * dy + dz * dz).sqrt();
    if distance == 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "coincident points {from:?}"
        )));
    }
    Ok(Angles {
        azimuth: dy.atan2(dx),
        elevation: (dz / distance).clamp(-1.0, 1.0).asin(),
        distance,
    })
}

pub fn ula_steering(n_antennas: usize, azimuth: f64) -> Vec<Complex> {
    let phase = -PI * azimuth.sin();
    (0..n_antennas)
        .map(|n| Complex::from_polar(1.0, phase * n as f64))
        .collect()
}

pub fn upa_steering(n_h: usize, n_v: usize, azimuth: f64, elevation: f64) -> Vec<Complex> {
    let h_phase = -PI * elevation.cos() * azimuth.sin();
    let v_phase = -PI * elevation.sin();
    let mut out = Vec::with_capacity(n_h * n_v);
    for p in 0..n_h {
        let hp = Complex::from_polar(1.0, h_phase * p as f64);
        for q in 0..n_v {
            out.push(hp * Complex::from_polar(1.0, v_phase * q as f64));
        }
    }
    out
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Complex] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }
}

/// One coherence block: every BS→RIS matrix and RIS→UE row.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `h[m]` is `N × N_T`.
    pub h: Vec<CMatrix>,
    /// `g[m][k]` has length `N`.
    pub g: Vec<Vec<Vec<Complex>>>,
    pub d_bs_ris: Vec<f64>,
    pub d_ris_ue: Vec<Vec<f64>>,
}

impl ChannelSet {
    pub fn is_finite(&self) -> bool {
        self.h
            .iter()
            .flat_map(|m| &m.data)
            .chain(self.g.iter().flatten().flatten())
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// One draw of `CN(0, 1)`: real and imaginary parts each `Normal(0, 1/2)`.
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Rank-one LOS component `a_RIS · a_BSᴴ` of the link from the BS to RIS `m`.
pub fn los_bs_ris(geom: &Geometry, m: usize) -> Result<CMatrix> {
    let ris = *geom.ris.get(m).ok_or(Error::IndexOutOfRange {
        index: m,
        len: geom.num_ris(),
    })?;
    let link = angles_between(geom.bs, ris)?;
    let arrival = upa_steering(geom.ris_rows, geom.ris_cols, link.azimuth, link.elevation);
    let departure = ula_steering(geom.bs_antennas, link.azimuth);
    Ok(CMatrix::from_fn(arrival.len(), departure.len(), |i, j| {
        arrival[i] * departure[j].conj()
    }))
}

/// LOS row `a_RISᴴ` from RIS `m` toward UE `k`.
pub fn los_ris_ue(geom: &Geometry, m: usize, k: usize) -> Result<Vec<Complex>> {
    let ris = *geom.ris.get(m).ok_or(Error::IndexOutOfRange {
        index: m,
        len: geom.num_ris(),
    })?;
    let ue = *geom.ues.get(k).ok_or(Error::IndexOutOfRange {
        index: k,
        len: geom.num_ues(),
    })?;
    let link = angles_between(ris, ue)?;
    Ok(
        upa_steering(geom.ris_rows, geom.ris_cols, link.azimuth, link.elevation)
            .into_iter()
            .map(|c| c.conj())
            .collect(),
    )
}

pub fn sample_bs_ris_channel<R: Rng + ?Sized>(
    geom: &Geometry,
    params: &RiceanParams,
    m: usize,
    rng: &mut R,
) -> Result<CMatrix> {
    let los = los_bs_ris(geom, m)?;
    Ok(mix_matrix(&los, params.kappa1(), rng))
}

pub fn sample_ris_ue_channel<R: Rng + ?Sized>(
    geom: &Geometry,
    params: &RiceanParams,
    m: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<Complex>> {
    let los = los_ris_ue(geom, m, k)?;
    Ok(mix_vector(&los, params.kappa2(), rng))
}

fn mix_matrix<R: Rng + ?Sized>(los: &CMatrix, kappa: f64, rng: &mut R) -> CMatrix {
    CMatrix {
        rows: los.rows,
        cols: los.cols,
        data: mix_vector(&los.data, kappa, rng),
    }
}

fn mix_vector<R: Rng + ?Sized>(los: &[Complex], kappa: f64, rng: &mut R) -> Vec<Complex> {
    let (w_los, w_nlos) = ricean_weights(kappa);
    los.iter()
        .map(|&l| l * w_los + standard_complex_normal(rng) * w_nlos)
        .collect()
}

/// Deterministic part of the channel for a fixed geometry, computed once and
/// reused for every coherence block.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    geometry: Geometry,
    params: RiceanParams,
    los_h: Vec<CMatrix>,
    los_g: Vec<Vec<Vec<Complex>>>,
    d_bs_ris: Vec<f64>,
    d_ris_ue: Vec<Vec<f64>>,
}

impl ChannelModel {
    pub fn new(geometry: Geometry, params: RiceanParams) -> Result<Self> {
        geometry.validate()?;
        params.validate()?;
        let (num_ris, num_ues) = (geometry.num_ris(), geometry.num_ues());
        let mut los_h = Vec::with_capacity(num_ris);
        let mut los_g = Vec::with_capacity(num_ris);
        let mut d_bs_ris = Vec::with_capacity(num_ris);
        let mut d_ris_ue = Vec::with_capacity(num_ris);
        for m in 0..num_ris {
            los_h.push(los_bs_ris(&geometry, m)?);
            d_bs_ris.push(angles_between(geometry.bs, geometry.ris[m])?.distance);
            let mut rows = Vec::with_capacity(num_ues);
            let mut dists = Vec::with_capacity(num_ues);
            for k in 0..num_ues {
                rows.push(los_ris_ue(&geometry, m, k)?);
                dists.push(angles_between(geometry.ris[m], geometry.ues[k])?.distance);
            }
            los_g.push(rows);
            d_ris_ue.push(dists);
        }
        Ok(Self {
            geometry,
            params,
            los_h,
            los_g,
            d_bs_ris,
            d_ris_ue,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn params(&self) -> &RiceanParams {
        &self.params
    }

    /// Draws every `H_m` (row-major) and then every `g_{m,k}` (RIS-major).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelSet {
        let (k1, k2) = (self.params.kappa1(), self.params.kappa2());
        let h = self
            .los_h
            .iter()
            .map(|los| mix_matrix(los, k1, rng))
            .collect();
        let g = self
            .los_g
            .iter()
            .map(|per_ue| per_ue.iter().map(|los| mix_vector(los, k2, rng)).collect())
            .collect();
        ChannelSet {
            h,
            g,
            d_bs_ris: self.d_bs_ris.clone(),
            d_ris_ue: self.d_ris_ue.clone(),
        }
    }
}

pub fn sample_channel_set<R: Rng + ?Sized>(
    geom: &Geometry,
    params: &RiceanParams,
    rng: &mut R,
) -> Result<ChannelSet> {
    Ok(ChannelModel::new(geom.clone(), *params)?.sample(rng))
}
