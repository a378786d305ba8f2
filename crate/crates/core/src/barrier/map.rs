use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solver::{
    continue_in_r, default_seeds, minimize_constrained, minimize_from, warm_seed, ConstrainedMin,
    ConstrainedOptions,
};
use crate::elastica::{enumerate_low_energy, threshold_ell, FigureEightConstants};
use crate::error::Result;

pub const MAP_HEADER: &str = "ell,r,m,converged";

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BarrierConfig {
    pub ell_max: f64,
    pub ell_points: usize,
    pub r_points: usize,
    /// `r` ranges over `[r_min_factor·r_*, r_max_factor·r_*]`.
    pub r_min_factor: f64,
    pub r_max_factor: f64,
    pub resolution: usize,
    pub rng_seed: u64,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        Self {
            ell_max: 0.5,
            ell_points: 51,
            r_points: 25,
            r_min_factor: -1.0,
            r_max_factor: 2.0,
            resolution: 512,
            rng_seed: 0,
        }
    }
}

impl BarrierConfig {
    pub fn ells(&self) -> Vec<f64> {
        grid(0.0, self.ell_max, self.ell_points)
    }

    pub fn rs(&self, r_star: f64) -> Vec<f64> {
        grid(self.r_min_factor * r_star, self.r_max_factor * r_star, self.r_points)
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BarrierCell {
    pub ell: f64,
    pub r: f64,
    /// `NaN` when no seed converged.
    pub m: f64,
    pub converged: bool,
}

/// Per-`ℓ` summary used by the derived constants.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BarrierRow {
    pub ell: f64,
    /// `m(ℓ, r_*/2)`.
    pub m_half: f64,
    /// `max_{r∈[0,r_*]} m(ℓ, r)` over the probed cells.
    pub m_max: f64,
    /// Upper-loop energy at `ℓ` (the figure-eight energy at `ℓ = 0`).
    pub loop_energy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierConstants {
    #[serde(rename = "mStar")]
    pub m_star: f64,
    pub c1: f64,
    #[serde(rename = "ellAdmissible")]
    pub ell_admissible: f64,
}

#[derive(Debug, Clone)]
pub struct BarrierMap {
    pub ells: Vec<f64>,
    pub rs: Vec<f64>,
    /// Row-major in `ℓ`.
    pub cells: Vec<BarrierCell>,
    pub rows: Vec<BarrierRow>,
    pub figure_eight: FigureEightConstants,
    /// `m(0, r_*)`.
    pub m_full: f64,
    pub constants: BarrierConstants,
    /// The energy barrier inequality holds on every probed `ℓ ≤ c1`.
    pub barrier_verified: bool,
    /// `m(0, r) ≥ m(0, r_*)` on the probed `r` (tolerance `1e-6`).
    pub figure_eight_minimal: bool,
}

impl BarrierMap {
    pub fn cell(&self, i_ell: usize, i_r: usize) -> &BarrierCell {
        &self.cells[i_ell * self.rs.len() + i_r]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{MAP_HEADER}")?;
        for c in &self.cells {
            writeln!(out, "{:?},{:?},{:?},{}", c.ell, c.r, c.m, c.converged)?;
        }
        Ok(())
    }

    /// `m(ℓ, r_*/2) - (E_* + m_*/2)` for every probed `ℓ`.
    pub fn barrier_margins(&self) -> Vec<(f64, f64)> {
        let target = self.figure_eight.e_star + 0.5 * self.constants.m_star;
        self.rows.iter().map(|r| (r.ell, r.m_half - target)).collect()
    }
}

const CONTINUATION_STEP: f64 = 0.25;

fn better(a: Option<ConstrainedMin>, b: Option<ConstrainedMin>) -> Option<ConstrainedMin> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.energy < a.energy { b } else { a }),
        (a, b) => a.or(b),
    }
}

/// Minimizers along one `ℓ` row: multi-start per cell, then continuation
/// sweeps in `r` in both directions and warm starts from the previous row.
fn fill_row(
    ell: f64,
    rs: &[f64],
    cfg: &BarrierConfig,
    opts: &ConstrainedOptions,
    previous_row: Option<&[Option<ConstrainedMin>]>,
) -> Vec<Option<ConstrainedMin>> {
    let mut best: Vec<Option<ConstrainedMin>> = rs
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut seeds = default_seeds(ell, r, cfg.resolution, cfg.rng_seed);
            if let Some(prev) = previous_row.and_then(|p| p[i].as_ref()) {
                if let Ok(seed) = warm_seed(&prev.curve, r) {
                    seeds.push(seed);
                }
            }
            minimize_constrained(ell, r, &seeds, opts).ok()
        })
        .collect();
    for pass in 0..2 {
        let order: Vec<usize> = if pass == 0 {
            (0..rs.len()).collect()
        } else {
            (0..rs.len()).rev().collect()
        };
        let mut carry: Option<ConstrainedMin> = None;
        for i in order {
            let followed = carry
                .as_ref()
                .and_then(|c| continue_in_r(c, rs[i], CONTINUATION_STEP, opts));
            best[i] = better(best[i].take(), followed);
            carry = best[i].clone();
        }
    }
    best
}

fn to_cell(ell: f64, r: f64, res: Option<&ConstrainedMin>) -> BarrierCell {
    match res {
        Some(res) => BarrierCell {
            ell,
            r,
            m: res.energy,
            converged: true,
        },
        None => {
            log::warn!("cell (ell={ell}, r={r}) failed to converge");
            BarrierCell {
                ell,
                r,
                m: f64::NAN,
                converged: false,
            }
        }
    }
}

/// Largest prefix of the `ℓ` rows on which `m(ℓ, r_*/2) ≥ E_* + m_*/2`.
pub fn barrier_c1(rows: &[BarrierRow], e_star: f64, m_star: f64) -> f64 {
    let target = e_star + 0.5 * m_star;
    let mut c1 = 0.0;
    for row in rows {
        if row.m_half >= target {
            c1 = row.ell;
        } else {
            break;
        }
    }
    c1
}

/// Largest prefix of the `ℓ` rows on which
/// `max_{r∈[0,r_*]} m(ℓ, r) ≥ E[upper loop at ℓ]`.
pub fn admissible_ell_bound(rows: &[BarrierRow]) -> f64 {
    let mut bound = 0.0;
    for row in rows {
        match row.loop_energy {
            Some(e) if row.m_max >= e => bound = row.ell,
            _ => break,
        }
    }
    bound
}

/// Fills the `(ℓ, r)` grid, the `r_*/2` column and the per-row loop
/// energies, then derives `m_*`, the `c1` estimate and the admissible bound.
pub fn barrier_constants(
    cfg: &BarrierConfig,
    figure_eight: &FigureEightConstants,
) -> Result<BarrierMap> {
    let opts = ConstrainedOptions::default();
    let r_star = figure_eight.r_star;
    let ells = cfg.ells();
    let rs = cfg.rs(r_star);
    let mut row_rs = rs.clone();
    row_rs.extend([0.5 * r_star, r_star]);
    row_rs.sort_by(f64::total_cmp);
    row_rs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let index_of = |r: f64| {
        row_rs
            .iter()
            .position(|v| (v - r).abs() < 1e-12)
            .expect("grid value present")
    };

    let mut cells = Vec::with_capacity(ells.len() * rs.len());
    let mut half = Vec::with_capacity(ells.len());
    let mut full = None;
    let mut previous: Option<Vec<Option<ConstrainedMin>>> = None;
    for &ell in &ells {
        let row = fill_row(ell, &row_rs, cfg, &opts, previous.as_deref());
        for &r in &rs {
            cells.push(to_cell(ell, r, row[index_of(r)].as_ref()));
        }
        half.push(to_cell(ell, 0.5 * r_star, row[index_of(0.5 * r_star)].as_ref()));
        if ell == 0.0 {
            full = Some(to_cell(ell, r_star, row[index_of(r_star)].as_ref()));
        }
        previous = Some(row);
    }
    let full = match full {
        Some(f) => f,
        None => to_cell(
            0.0,
            r_star,
            minimize_constrained(
                0.0,
                r_star,
                &default_seeds(0.0, r_star, cfg.resolution, cfg.rng_seed),
                &opts,
            )
            .ok()
            .as_ref(),
        ),
    };
    let ell_dagger = threshold_ell();
    let loop_energies: Vec<Option<f64>> = ells
        .par_iter()
        .map(|&l| {
            if l == 0.0 {
                Some(figure_eight.e_star)
            } else if l < ell_dagger {
                enumerate_low_energy(l).ok().map(|c| c.loop_plus.report.energy)
            } else {
                None
            }
        })
        .collect();

    let rows: Vec<BarrierRow> = ells
        .iter()
        .enumerate()
        .map(|(i, &ell)| {
            let m_max = cells[i * rs.len()..(i + 1) * rs.len()]
                .iter()
                .filter(|c| c.converged && c.r >= -1e-12 && c.r <= r_star * (1.0 + 1e-12))
                .map(|c| c.m)
                .chain(half[i].converged.then_some(half[i].m))
                .fold(f64::NEG_INFINITY, f64::max);
            BarrierRow {
                ell,
                m_half: half[i].m,
                m_max,
                loop_energy: loop_energies[i],
            }
        })
        .collect();

    let m_full = full.m;
    let m_star = rows.first().map_or(f64::NAN, |r| r.m_half) - m_full;
    let c1 = barrier_c1(&rows, figure_eight.e_star, m_star);
    let ell_admissible = admissible_ell_bound(&rows);
    let target = figure_eight.e_star + 0.5 * m_star;
    let barrier_verified = rows
        .iter()
        .filter(|r| r.ell <= c1)
        .all(|r| r.m_half >= target);
    let figure_eight_minimal = cells
        .iter()
        .filter(|c| c.ell == 0.0 && c.converged)
        .all(|c| c.m >= m_full - 1e-6);

    Ok(BarrierMap {
        ells,
        rs,
        cells,
        rows,
        figure_eight: *figure_eight,
        m_full,
        constants: BarrierConstants {
            m_star,
            c1,
            ell_admissible,
        },
        barrier_verified,
        figure_eight_minimal,
    })
}

/// Evidence for the jump of `m` at the origin.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiscontinuityEvidence {
    /// `ℓ` of the segment probe and `m(ℓ, 0)` found there.
    pub segment_ell: f64,
    pub segment_m: f64,
    /// Least energy found in the closed class with zero total curvature.
    pub origin_best: f64,
    pub origin_converged: usize,
    pub origin_seeds: usize,
    /// `2π`, from `E ≥ 2√(L·B)` and `L·B ≥ π²`.
    pub origin_lower_bound: f64,
    pub m_half: f64,
    pub m_full: f64,
}

pub fn discontinuity_probe(
    figure_eight: &FigureEightConstants,
    resolution: usize,
    rng_seed: u64,
) -> Result<DiscontinuityEvidence> {
    let opts = ConstrainedOptions::default();
    let segment_ell = 0.01;
    let segment = minimize_constrained(
        segment_ell,
        0.0,
        &default_seeds(segment_ell, 0.0, resolution, rng_seed),
        &opts,
    )?;
    let mut seeds = Vec::new();
    for k in 0..4u64 {
        seeds.extend(default_seeds(0.0, 0.0, resolution, rng_seed.wrapping_add(k)));
    }
    let mut origin_best = f64::INFINITY;
    let mut origin_converged = 0;
    for seed in &seeds {
        if let Ok(res) = minimize_from(0.0, seed, &opts) {
            if res.converged {
                origin_converged += 1;
                origin_best = origin_best.min(res.energy);
            }
        }
    }
    let r_star = figure_eight.r_star;
    let half = minimize_constrained(
        0.0,
        0.5 * r_star,
        &default_seeds(0.0, 0.5 * r_star, resolution, rng_seed),
        &opts,
    )?;
    let full = minimize_constrained(
        0.0,
        r_star,
        &default_seeds(0.0, r_star, resolution, rng_seed),
        &opts,
    )?;
    Ok(DiscontinuityEvidence {
        segment_ell,
        segment_m: segment.energy,
        origin_best,
        origin_converged,
        origin_seeds: seeds.len(),
        origin_lower_bound: 2.0 * std::f64::consts::PI,
        m_half: half.energy,
        m_full: full.energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(ell: f64, m_half: f64, m_max: f64, loop_energy: Option<f64>) -> BarrierRow {
        BarrierRow {
            ell,
            m_half,
            m_max,
            loop_energy,
        }
    }

    #[test]
    fn grids_hit_end_points() {
        let cfg = BarrierConfig {
            ell_max: 0.5,
            ell_points: 10,
            r_points: 10,
            ..BarrierConfig::default()
        };
        let e = cfg.ells();
        assert_eq!(e[0], 0.0);
        assert_eq!(e[9], 0.5);
        let r = cfg.rs(3.0);
        assert_eq!(r[0], -3.0);
        assert_eq!(r[9], 6.0);
        assert!(r.iter().any(|v| *v == 0.0 || v.abs() < 1e-15));
    }

    #[test]
    fn c1_is_a_prefix() {
        let rows = [
            row(0.0, 12.0, 0.0, None),
            row(0.1, 11.5, 0.0, None),
            row(0.2, 10.0, 0.0, None),
            row(0.3, 12.0, 0.0, None),
        ];
        assert_eq!(barrier_c1(&rows, 10.6, 1.0), 0.1);
    }

    #[test]
    fn admissible_bound_stops_at_first_failure() {
        let rows = [
            row(0.0, 0.0, 12.0, Some(10.6)),
            row(0.1, 0.0, 12.0, Some(10.8)),
            row(0.2, 0.0, 10.0, Some(10.9)),
            row(0.3, 0.0, 12.0, Some(11.0)),
        ];
        assert_eq!(admissible_ell_bound(&rows), 0.1);
        assert_eq!(admissible_ell_bound(&[row(0.0, 0.0, 1.0, None)]), 0.0);
    }
}
