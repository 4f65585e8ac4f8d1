//! Exact analysis of the adversarial game when every distribution has finite
//! support: the optimal discriminator, the value `C(G) = max_D V(G, D)`, grid
//! verification of the `-log 4` optimum, and the chain of bounds relating the
//! clean mixture, its noised counterpart and the generator.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distributions::{discrete_convolve, DiscreteDist, PointKey, SpikeSlabNoise};
use crate::divergence::{jsd_discrete, tv_discrete};
use crate::{Error, Result};

/// Slack allowed on inequalities that hold in exact arithmetic.
pub const INEQUALITY_TOL: f64 = 1e-12;
/// Slack allowed on identities that go through logarithms.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Largest support [`verify_grid_optimum`] will enumerate over.
pub const MAX_GRID_SUPPORT: usize = 4;

/// `-ln 4`, the value of the game when the generator matches the data.
pub fn neg_log4() -> f64 {
    -(4.0f64).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPart {
    pub dist: DiscreteDist,
    pub alpha: f64,
}

/// `L` weighted data distributions, one noise channel per part, and a generator law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct GameInstance {
    data_parts: Vec<DataPart>,
    noise_per_part: Vec<SpikeSlabNoise>,
    p_g: DiscreteDist,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    data_parts: Vec<DataPart>,
    noise_per_part: Vec<SpikeSlabNoise>,
    p_g: DiscreteDist,
}

impl TryFrom<RawInstance> for GameInstance {
    type Error = Error;
    fn try_from(raw: RawInstance) -> Result<Self> {
        GameInstance::new(raw.data_parts, raw.noise_per_part, raw.p_g)
    }
}

impl From<GameInstance> for RawInstance {
    fn from(g: GameInstance) -> Self {
        RawInstance {
            data_parts: g.data_parts,
            noise_per_part: g.noise_per_part,
            p_g: g.p_g,
        }
    }
}

impl GameInstance {
    pub fn new(
        data_parts: Vec<DataPart>,
        noise_per_part: Vec<SpikeSlabNoise>,
        p_g: DiscreteDist,
    ) -> Result<Self> {
        if data_parts.is_empty() {
            return Err(Error::config("data_parts", "need at least one part"));
        }
        if data_parts.len() != noise_per_part.len() {
            return Err(Error::config(
                "noise_per_part",
                format!(
                    "{} data parts but {} noise channels",
                    data_parts.len(),
                    noise_per_part.len()
                ),
            ));
        }
        let dim = p_g.dim();
        let mut total = 0.0;
        for (i, (part, noise)) in data_parts.iter().zip(&noise_per_part).enumerate() {
            if !(part.alpha > 0.0) {
                return Err(Error::config(
                    format!("data_parts[{i}].alpha"),
                    "must be positive",
                ));
            }
            if part.dist.dim() != dim {
                return Err(Error::config(
                    format!("data_parts[{i}].dist"),
                    format!(
                        "dimension {} differs from p_g dimension {dim}",
                        part.dist.dim()
                    ),
                ));
            }
            noise
                .validate()
                .map_err(|e| prefix(e, &format!("noise_per_part[{i}]")))?;
            if noise.dim() != dim {
                return Err(Error::config(
                    format!("noise_per_part[{i}].slab"),
                    format!(
                        "dimension {} differs from data dimension {dim}",
                        noise.dim()
                    ),
                ));
            }
            total += part.alpha;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::config(
                "data_parts.alpha",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        Ok(Self {
            data_parts,
            noise_per_part,
            p_g,
        })
    }

    /// Single clean part with weight 1 against `p_g`.
    pub fn single(p_data: DiscreteDist, p_g: DiscreteDist) -> Result<Self> {
        let dim = p_data.dim();
        Self::new(
            vec![DataPart {
                dist: p_data,
                alpha: 1.0,
            }],
            vec![SpikeSlabNoise::none(dim)],
            p_g,
        )
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn data_parts(&self) -> &[DataPart] {
        &self.data_parts
    }

    pub fn noise_per_part(&self) -> &[SpikeSlabNoise] {
        &self.noise_per_part
    }

    pub fn p_g(&self) -> &DiscreteDist {
        &self.p_g
    }

    pub fn with_p_g(&self, p_g: DiscreteDist) -> Result<Self> {
        Self::new(self.data_parts.clone(), self.noise_per_part.clone(), p_g)
    }

    /// Largest channel weight, the natural budget for this instance.
    pub fn max_gamma(&self) -> f64 {
        self.noise_per_part
            .iter()
            .map(|n| n.gamma)
            .fold(0.0, f64::max)
    }

    /// Clean mixture `Σ α_l p_l`.
    pub fn p_mix(&self) -> Result<DiscreteDist> {
        let parts: Vec<(f64, &DiscreteDist)> =
            self.data_parts.iter().map(|p| (p.alpha, &p.dist)).collect();
        DiscreteDist::mixture(&parts)
    }

    /// Each part pushed through its channel.
    pub fn noised_parts(&self) -> Result<Vec<DiscreteDist>> {
        self.data_parts
            .iter()
            .zip(&self.noise_per_part)
            .map(|(part, noise)| discrete_convolve(&part.dist, noise))
            .collect()
    }

    /// Noised mixture `Σ α_l p'_l`.
    pub fn p_mix_noised(&self) -> Result<DiscreteDist> {
        let noised = self.noised_parts()?;
        let parts: Vec<(f64, &DiscreteDist)> = self
            .data_parts
            .iter()
            .map(|p| p.alpha)
            .zip(noised.iter())
            .collect();
        DiscreteDist::mixture(&parts)
    }
}

fn prefix(err: Error, field: &str) -> Error {
    match err {
        Error::InvalidConfig { field: f, reason } => Error::config(format!("{field}.{f}"), reason),
        other => other,
    }
}

/// Discriminator values on a finite set of points.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorTable {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl DiscriminatorTable {
    pub fn get(&self, point: &[f64]) -> Option<f64> {
        let key = PointKey::of(point);
        self.points
            .iter()
            .position(|p| PointKey::of(p) == key)
            .map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `D*(x) = p'_mix(x) / (p'_mix(x) + p_g(x))` on the union support; points
/// where both vanish are left out.
pub fn optimal_discriminator(inst: &GameInstance) -> Result<DiscriminatorTable> {
    let real = inst.p_mix_noised()?;
    let (points, a, b) = real.align(inst.p_g());
    let mut table = DiscriminatorTable {
        points: Vec::with_capacity(points.len()),
        values: Vec::with_capacity(points.len()),
    };
    for (pt, (pa, pb)) in points.into_iter().zip(a.into_iter().zip(b)) {
        if pa + pb > 0.0 {
            table.points.push(pt);
            table.values.push(pa / (pa + pb));
        }
    }
    Ok(table)
}

/// `V(G, D) = E_real[ln D] + E_g[ln(1 - D)]`; zero-weight terms are skipped.
pub fn game_value(p_real: &DiscreteDist, p_g: &DiscreteDist, disc: impl Fn(&[f64]) -> f64) -> f64 {
    let (points, a, b) = p_real.align(p_g);
    let mut v = 0.0;
    for (pt, (pa, pb)) in points.iter().zip(a.iter().zip(&b)) {
        let d = if *pa > 0.0 || *pb > 0.0 {
            disc(pt)
        } else {
            continue;
        };
        if *pa > 0.0 {
            v += pa * d.ln();
        }
        if *pb > 0.0 {
            v += pb * (1.0 - d).ln();
        }
    }
    v
}

/// `max_D V` for aligned probability vectors, evaluated at the pointwise optimum.
fn optimal_value(real: &[f64], gen: &[f64]) -> f64 {
    real.iter()
        .zip(gen)
        .map(|(&a, &b)| {
            let s = a + b;
            let mut t = 0.0;
            if a > 0.0 {
                t += a * (a / s).ln();
            }
            if b > 0.0 {
                t += b * (b / s).ln();
            }
            t
        })
        .sum()
}

/// `C(G)`: the game value at the optimal discriminator against the noised mixture.
pub fn value_c(inst: &GameInstance) -> Result<f64> {
    let table = optimal_discriminator(inst)?;
    let real = inst.p_mix_noised()?;
    Ok(game_value(&real, inst.p_g(), |x| {
        table
            .get(x)
            .expect("D* is defined wherever either law has mass")
    }))
}

/// `-ln 4 + 2 · JSD(p'_mix, p_g)`, the closed form `C(G)` must equal.
pub fn value_c_closed_form(inst: &GameInstance) -> Result<f64> {
    Ok(neg_log4() + 2.0 * jsd_discrete(&inst.p_mix_noised()?, inst.p_g()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridOptimumReport {
    /// Grid law minimizing `C`.
    pub argmin: DiscreteDist,
    pub min_value: f64,
    /// Grid law closest to the data in L1 (ties: first in lexicographic order).
    pub nearest: DiscreteDist,
    /// Second-smallest value over the grid, if the grid has more than one point.
    pub runner_up: Option<f64>,
    pub grid_points: usize,
}

impl GridOptimumReport {
    pub fn argmin_is_nearest(&self) -> bool {
        self.argmin.max_abs_diff(&self.nearest) < 1e-12
    }

    pub fn min_is_neg_log4(&self) -> bool {
        (self.min_value - neg_log4()).abs() <= IDENTITY_TOL
    }
}

/// Minimizes `C(G)` over every generator law on `p_data`'s support whose
/// probabilities are multiples of `grid_step`.
pub fn verify_grid_optimum(p_data: &DiscreteDist, grid_step: f64) -> Result<GridOptimumReport> {
    let s = p_data.len();
    if s > MAX_GRID_SUPPORT {
        return Err(Error::config(
            "support",
            format!("grid enumeration limited to {MAX_GRID_SUPPORT} points, got {s}"),
        ));
    }
    if !(grid_step > 0.0 && grid_step <= 0.25) {
        return Err(Error::config("grid_step", "must lie in (0, 0.25]"));
    }
    let steps = (1.0 / grid_step).round();
    if (steps * grid_step - 1.0).abs() > 1e-9 {
        return Err(Error::config(
            "grid_step",
            "1 / grid_step must be an integer",
        ));
    }
    let m = steps as usize;

    let data = p_data.probs();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut runner_up: Option<f64> = None;
    let mut nearest: Option<(f64, Vec<usize>)> = None;
    let mut grid_points = 0;
    let mut counts = vec![0usize; s];
    for_each_composition(m, &mut counts, 0, &mut |c| {
        grid_points += 1;
        let q: Vec<f64> = c.iter().map(|&k| k as f64 / m as f64).collect();
        let v = optimal_value(data, &q);
        match &best {
            Some((bv, _)) if v >= *bv => {
                runner_up = Some(runner_up.map_or(v, |r: f64| r.min(v)));
            }
            _ => {
                if let Some((bv, _)) = &best {
                    runner_up = Some(runner_up.map_or(*bv, |r: f64| r.min(*bv)));
                }
                best = Some((v, c.to_vec()));
            }
        }
        let dist: f64 = q.iter().zip(data).map(|(a, b)| (a - b).abs()).sum();
        if nearest.as_ref().is_none_or(|(nd, _)| dist < *nd) {
            nearest = Some((dist, c.to_vec()));
        }
    });
    let to_dist = |c: &[usize]| {
        let probs: Vec<f64> = c.iter().map(|&k| k as f64 / m as f64).collect();
        DiscreteDist::new(p_data.support().to_vec(), probs)
    };
    let (min_value, arg) = best.expect("grid is never empty");
    Ok(GridOptimumReport {
        argmin: to_dist(&arg)?,
        min_value,
        nearest: to_dist(&nearest.expect("grid is never empty").1)?,
        runner_up,
        grid_points,
    })
}

/// Visits all `counts` with `Σ counts = total`, lexicographically.
fn for_each_composition(
    total: usize,
    counts: &mut [usize],
    pos: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if pos + 1 == counts.len() {
        counts[pos] = total;
        f(counts);
        return;
    }
    for k in 0..=total {
        counts[pos] = k;
        for_each_composition(total - k, counts, pos + 1, f);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelBound {
    pub tv: f64,
    pub gamma: f64,
    pub satisfied: bool,
}

/// Exact `TV(p_x, law of X + Z)` against the channel weight `gamma`.
pub fn channel_bound_check(p_x: &DiscreteDist, noise: &SpikeSlabNoise) -> Result<ChannelBound> {
    let p_y = discrete_convolve(p_x, noise)?;
    let tv = tv_discrete(p_x, &p_y);
    Ok(ChannelBound {
        tv,
        gamma: noise.gamma,
        satisfied: tv <= noise.gamma + INEQUALITY_TOL,
    })
}

/// One verified inequality `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; negative beyond the tolerance means the check failed.
    pub slack: f64,
    pub holds: bool,
}

impl InequalityCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = rhs - lhs;
        Self {
            name: name.into(),
            lhs,
            rhs,
            slack,
            holds: slack >= -tol,
        }
    }

    pub const CSV_HEADER: &'static str = "check,lhs,rhs,slack,holds";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.name, self.lhs, self.rhs, self.slack, self.holds
        )
    }
}

/// Renders checks as CSV with a header line.
pub fn checks_to_csv(checks: &[InequalityCheck]) -> String {
    let mut out = String::from(InequalityCheck::CSV_HEADER);
    out.push('\n');
    for c in checks {
        let _ = writeln!(out, "{}", c.csv_row());
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainReport {
    pub delta: f64,
    pub checks: Vec<InequalityCheck>,
}

impl ChainReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn get(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Evaluates every link of the bound chain from per-part channel budgets to
/// the mixture-level JSD bound. Requires every `gamma_l ≤ delta`.
pub fn mixture_chain_check(inst: &GameInstance, delta: f64) -> Result<ChainReport> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::config("delta", "must lie in [0, 1]"));
    }
    if let Some(l) = inst.noise_per_part.iter().position(|n| n.gamma > delta) {
        return Err(Error::config(
            "delta",
            format!(
                "channel {l} has gamma {} above the budget {delta}",
                inst.noise_per_part[l].gamma
            ),
        ));
    }
    let tol = INEQUALITY_TOL;
    let noised = inst.noised_parts()?;
    let mut checks = Vec::new();
    let mut weighted_tv = 0.0;
    for (l, ((part, noise), p_noised)) in inst
        .data_parts
        .iter()
        .zip(&inst.noise_per_part)
        .zip(&noised)
        .enumerate()
    {
        let tv = tv_discrete(&part.dist, p_noised);
        checks.push(InequalityCheck::new(
            format!("channel_tv[{l}]"),
            tv,
            noise.gamma,
            tol,
        ));
        checks.push(InequalityCheck::new(
            format!("part_tv_budget[{l}]"),
            tv,
            delta,
            tol,
        ));
        weighted_tv += part.alpha * tv;
    }
    let p_mix = inst.p_mix()?;
    let p_mix_noised = inst.p_mix_noised()?;
    let tv_mix = tv_discrete(&p_mix, &p_mix_noised);
    let jsd_mix = jsd_discrete(&p_mix, &p_mix_noised);
    checks.push(InequalityCheck::new(
        "tv_concavity",
        tv_mix,
        weighted_tv,
        tol,
    ));
    checks.push(InequalityCheck::new(
        "weighted_tv_budget",
        weighted_tv,
        delta,
        tol,
    ));
    checks.push(InequalityCheck::new("jsd_le_tv", jsd_mix, tv_mix, tol));
    checks.push(InequalityCheck::new("mix_jsd_budget", jsd_mix, delta, tol));

    let lhs = jsd_discrete(&p_mix, inst.p_g()).sqrt();
    let to_g = jsd_discrete(&p_mix_noised, inst.p_g()).sqrt();
    checks.push(InequalityCheck::new(
        "sqrt_jsd_triangle",
        lhs,
        to_g + jsd_mix.sqrt(),
        tol,
    ));
    checks.push(InequalityCheck::new(
        "sqrt_jsd_budget",
        lhs,
        to_g + delta.sqrt(),
        tol,
    ));
    Ok(ChainReport { delta, checks })
}

/// `|C(G) - (-ln 4 + 2 JSD)| ≤ IDENTITY_TOL`, expressed as an inequality row.
pub fn value_identity_check(inst: &GameInstance) -> Result<InequalityCheck> {
    let diff = (value_c(inst)? - value_c_closed_form(inst)?).abs();
    Ok(InequalityCheck::new(
        "value_identity",
        diff,
        IDENTITY_TOL,
        0.0,
    ))
}

/// `C(G) ≥ -ln 4`, expressed as an inequality row.
pub fn value_floor_check(inst: &GameInstance) -> Result<InequalityCheck> {
    Ok(InequalityCheck::new(
        "value_floor",
        neg_log4(),
        value_c(inst)?,
        IDENTITY_TOL,
    ))
}
