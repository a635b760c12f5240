//! Parameter sweeps: a scenario template, a grid of protocol settings and a
//! number of seeded replications per grid cell.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sim::{run, RunResult, Scenario, StopCondition};
use crate::topology::FormationSpec;
use crate::{Error, Result};

/// Values to sweep. An omitted axis keeps the template's value; an axis given
/// as an empty list leaves no cells at all and is rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    /// UAV counts, applied by resizing the template formation.
    pub u: Option<Vec<usize>>,
    /// Hexagonal ring counts. Excludes `u`.
    pub rings: Option<Vec<usize>>,
    pub tsr: Option<Vec<f64>>,
    pub ct: Option<Vec<u32>>,
    pub gm: Option<Vec<u32>>,
    pub st: Option<Vec<u32>>,
    pub dss: Option<Vec<u32>>,
    pub fst: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub grid: Grid,
    #[serde(default = "one")]
    pub replications: u32,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub outputs: Outputs,
}

fn one() -> u32 {
    1
}

/// One point of the grid, fully resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub formation: FormationSpec,
    pub u: usize,
    pub tsr: f64,
    pub ct: u32,
    pub gm: u32,
    pub st: u32,
    pub dss: u32,
    pub fst: u32,
}

impl Cell {
    pub fn scenario(&self, template: &Scenario, seed: u64) -> Scenario {
        let mut sc = template.clone();
        sc.formation = self.formation.clone();
        sc.protocol.tsr = self.tsr;
        sc.protocol.ct = self.ct;
        sc.protocol.gm = self.gm;
        sc.protocol.st = self.st;
        sc.protocol.dss = self.dss;
        sc.protocol.fst = self.fst;
        sc.seed = seed;
        sc
    }
}

/// One CSV line. Missing metrics (no resolution, no convergence) are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub run_id: u64,
    pub seed: u64,
    pub u: usize,
    pub tsr: f64,
    pub ct: u32,
    pub gm: u32,
    pub st: u32,
    pub dss: u32,
    pub fst: u32,
    pub resolution_slots: Option<u64>,
    pub resolution_rounds: Option<f64>,
    pub convergence_slots: Option<u64>,
    pub convergence_rounds: Option<f64>,
    pub final_superframe: u32,
    pub reuse: f64,
    pub control_packets: u64,
    pub overhead_normalized: Option<f64>,
    pub removed_slots: u64,
    pub valid: bool,
}

impl Row {
    fn new(run_id: u64, cell: &Cell, r: &RunResult) -> Row {
        Row {
            run_id,
            seed: r.seed,
            u: cell.u,
            tsr: cell.tsr,
            ct: cell.ct,
            gm: cell.gm,
            st: cell.st,
            dss: cell.dss,
            fst: cell.fst,
            resolution_slots: r.resolution_slot,
            resolution_rounds: r.resolution_rounds,
            convergence_slots: r.convergence_slot,
            convergence_rounds: r.convergence_rounds,
            final_superframe: r.final_superframe,
            reuse: r.reuse,
            control_packets: r.control_packets,
            overhead_normalized: r.overhead_normalized,
            removed_slots: r.removed_slots,
            valid: r.valid,
        }
    }

    /// Metrics summarized per cell, in output order.
    pub fn metrics(&self) -> [(&'static str, Option<f64>); 9] {
        [
            ("resolution_slots", self.resolution_slots.map(|v| v as f64)),
            ("resolution_rounds", self.resolution_rounds),
            ("convergence_slots", self.convergence_slots.map(|v| v as f64)),
            ("convergence_rounds", self.convergence_rounds),
            ("final_superframe", Some(self.final_superframe as f64)),
            ("reuse", Some(self.reuse)),
            ("control_packets", Some(self.control_packets as f64)),
            ("overhead_normalized", self.overhead_normalized),
            ("removed_slots", Some(self.removed_slots as f64)),
        ]
    }
}

/// Descriptive statistics of one metric. `std` and `var` use n - 1 and are
/// absent below two samples; quartiles interpolate linearly between order
/// statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub var: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub q25: Option<f64>,
    pub q50: Option<f64>,
    pub q75: Option<f64>,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        let n = values.len();
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = (n > 0).then(|| sorted.iter().sum::<f64>() / n as f64);
        let var = mean.filter(|_| n > 1).map(|m| sorted.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64);
        Stats {
            n,
            mean,
            std: var.map(f64::sqrt),
            var,
            min: sorted.first().copied(),
            max: sorted.last().copied(),
            q25: quantile(&sorted, 0.25),
            q50: quantile(&sorted, 0.5),
            q75: quantile(&sorted, 0.75),
        }
    }
}

/// Linear interpolation at rank `q * (n - 1)` of already sorted values.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub u: usize,
    pub tsr: f64,
    pub ct: u32,
    pub gm: u32,
    pub st: u32,
    pub dss: u32,
    pub fst: u32,
    pub runs: usize,
    pub converged: usize,
    pub metrics: BTreeMap<String, Stats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<Row>,
    pub summary: Vec<CellSummary>,
}

impl ExperimentOutput {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)?)
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.convergence_slots.is_some())
    }
}

/// Rows read back from a results CSV.
pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<Row>> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep` in cell `cell`. Depends on nothing else, so
/// adding axes or replications leaves existing seeds untouched.
pub fn derive_seed(base_seed: u64, cell: usize, rep: u32) -> u64 {
    splitmix64(splitmix64(base_seed ^ splitmix64(cell as u64)) ^ rep as u64)
}

fn axis<T: Clone>(name: &str, values: &Option<Vec<T>>, default: T) -> Result<Vec<T>> {
    match values {
        None => Ok(vec![default]),
        Some(v) if v.is_empty() => Err(Error::Config(format!("empty grid: axis {name} has no values"))),
        Some(v) => Ok(v.clone()),
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    /// Cartesian product of the axes, formation varying slowest.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let g = &self.grid;
        if *g == Grid::default() {
            return Err(Error::Config("empty grid: no axis given".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        let template = &self.scenario.formation;
        let formations: Vec<FormationSpec> = match (&g.u, &g.rings) {
            (Some(_), Some(_)) => return Err(Error::Config("grid axes u and rings are exclusive".into())),
            (Some(_), None) => axis("u", &g.u, 0)?
                .into_iter()
                .map(|u| template.with_uav_count(u))
                .collect::<Result<_>>()?,
            (None, Some(_)) => {
                let spacing = match *template {
                    FormationSpec::HexRings { spacing, .. } | FormationSpec::HexGrid { spacing, .. } => spacing,
                    FormationSpec::SingleHop { .. } => 10.0,
                };
                axis("rings", &g.rings, 0)?.into_iter().map(|rings| FormationSpec::HexRings { rings, spacing }).collect()
            }
            (None, None) => vec![template.clone()],
        };
        let p = &self.scenario.protocol;
        let tsr = axis("tsr", &g.tsr, p.tsr)?;
        let ct = axis("ct", &g.ct, p.ct)?;
        let gm = axis("gm", &g.gm, p.gm)?;
        let st = axis("st", &g.st, p.st)?;
        let dss = axis("dss", &g.dss, p.dss)?;
        let fst = axis("fst", &g.fst, p.fst)?;

        let mut cells = Vec::new();
        for f in &formations {
            for &tsr in &tsr {
                for &ct in &ct {
                    for &gm in &gm {
                        for &st in &st {
                            for &dss in &dss {
                                for &fst in &fst {
                                    cells.push(Cell {
                                        index: cells.len(),
                                        formation: f.clone(),
                                        u: f.uav_count(),
                                        tsr,
                                        ct,
                                        gm,
                                        st,
                                        dss,
                                        fst,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}

/// Runs every (cell, replication) pair on up to `jobs` threads. Rows come
/// back in (cell, replication) order whatever the completion order.
pub fn run_experiment(spec: &ExperimentSpec, jobs: usize) -> Result<ExperimentOutput> {
    let cells = spec.cells()?;
    for cell in &cells {
        let sc = cell.scenario(&spec.scenario, 0);
        let formation = sc.formation.build(sc.safety_radius)?;
        sc.validate(&formation)?;
    }
    let reps = spec.replications;
    let tasks: Vec<(usize, u32)> = (0..cells.len()).flat_map(|c| (0..reps).map(move |r| (c, r))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<Row>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, rep)| {
                let cell = &cells[c];
                let seed = derive_seed(spec.base_seed, c, rep);
                let r = run(&cell.scenario(&spec.scenario, seed))?;
                if spec.scenario.stop == StopCondition::Convergence && r.converged && !r.valid {
                    return Err(Error::Validation(format!(
                        "cell {c} replication {rep} (seed {seed}) converged to an invalid allocation"
                    )));
                }
                let run_id = c as u64 * reps as u64 + rep as u64;
                Ok(Row::new(run_id, cell, &r))
            })
            .collect()
    });
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    let summary = summarize(&cells, &rows);
    Ok(ExperimentOutput { rows, summary })
}

pub fn summarize(cells: &[Cell], rows: &[Row]) -> Vec<CellSummary> {
    let reps = if cells.is_empty() { 0 } else { rows.len() / cells.len() };
    cells
        .iter()
        .map(|cell| {
            let mine = &rows[cell.index * reps..(cell.index + 1) * reps];
            let mut metrics = BTreeMap::new();
            for (k, (name, _)) in Row::metrics(&mine[0]).iter().enumerate() {
                let values: Vec<f64> = mine.iter().filter_map(|r| r.metrics()[k].1).collect();
                metrics.insert(name.to_string(), Stats::of(&values));
            }
            CellSummary {
                cell: cell.index,
                u: cell.u,
                tsr: cell.tsr,
                ct: cell.ct,
                gm: cell.gm,
                st: cell.st,
                dss: cell.dss,
                fst: cell.fst,
                runs: mine.len(),
                converged: mine.iter().filter(|r| r.convergence_slots.is_some()).count(),
                metrics,
            }
        })
        .collect()
}
