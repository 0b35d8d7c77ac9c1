//! Experiment drivers: single runs with CSV/VTK output, frequency and
//! stiffness sweeps, and the stroke statistics derived from them.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{RecordWriter, VtkGrid};
use crate::swimmer::{stroke_area, Simulation};

/// One row of the per-step CSV log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrokeRecord {
    pub t: f64,
    pub x_cm: f64,
    pub y_cm: f64,
    /// Orientation wrapped into [−π, π].
    pub theta: f64,
    pub u_x: f64,
    pub u_y: f64,
    pub omega: f64,
    /// Unwrapped stroke angles.
    pub theta_head: f64,
    pub theta_tail: f64,
    pub iterations: usize,
    pub min_quality: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub records: Vec<StrokeRecord>,
    /// Net x displacement of the mass centroid over `window`.
    pub delta_x: f64,
    /// Area of the (θ_head, θ_tail) loop over `window`.
    pub stroke_area: f64,
    /// First and last record index of the measurement period.
    pub window: (usize, usize),
    pub total_iterations: usize,
    pub remesh_count: usize,
}

pub fn wrap_angle(theta: f64) -> f64 {
    let w = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// The value congruent to `raw` modulo 2π that is closest to `previous`.
pub fn unwrap_angle(previous: f64, raw: f64) -> f64 {
    previous + wrap_angle(raw - previous)
}

/// Record indices bounding the third actuation period, or the last complete
/// period of shorter runs (the whole run if it is shorter than a period).
pub fn measurement_window(steps_per_period: usize, num_steps: usize) -> (usize, usize) {
    let periods = num_steps / steps_per_period.max(1);
    match periods {
        0 => (0, num_steps),
        p => {
            let k = p.min(3);
            ((k - 1) * steps_per_period, k * steps_per_period)
        }
    }
}

fn record(sim: &Simulation, angles: (f64, f64), iterations: usize, min_quality: f64) -> Result<StrokeRecord> {
    let c = sim.centroid()?;
    let rigid = &sim.state.rigid;
    Ok(StrokeRecord {
        t: sim.state.time,
        x_cm: c[0],
        y_cm: c[1],
        theta: wrap_angle(rigid.theta),
        u_x: rigid.velocity[0],
        u_y: rigid.velocity[1],
        omega: rigid.omega,
        theta_head: angles.0,
        theta_tail: angles.1,
        iterations,
        min_quality,
    })
}

/// Fluid snapshot on the current mesh: velocity `u` and mesh displacement
/// `eta_F` at the vertices, pressure `p`.
pub fn fluid_snapshot(sim: &Simulation) -> VtkGrid {
    let st = &sim.state;
    let mesh = &st.ale.current;
    let u = (0..mesh.num_vertices()).map(|v| [st.fluid.u[2 * v], st.fluid.u[2 * v + 1]]).collect();
    VtkGrid::new(&format!("t = {:e}", st.time), mesh.vertices.clone(), mesh.triangles.clone())
        .with_vectors("u", u)
        .with_vectors("eta_F", st.ale.displacement.clone())
        .with_scalars("p", st.fluid.p.clone())
}

/// Solid snapshot on the deformed swimmer with the displacement `eta`.
pub fn solid_snapshot(sim: &Simulation) -> VtkGrid {
    let eta = &sim.state.elastic.eta;
    let mesh = &sim.model.mesh;
    let d: Vec<_> = (0..mesh.num_vertices()).map(|v| [eta[2 * v], eta[2 * v + 1]]).collect();
    VtkGrid::new(&format!("t = {:e}", sim.state.time), sim.solid_positions(), mesh.triangles.clone())
        .with_vectors("eta", d)
}

/// Runs the configured number of steps. With `out` set, writes
/// `strokes.csv` (one row per step, flushed as it goes) and, if enabled,
/// `fluid_NNNNN.vtk` / `solid_NNNNN.vtk` every `output.stride` steps.
pub fn run_single(config: &RunConfig, out: Option<&Path>) -> Result<RunSummary> {
    config.validate()?;
    let mut sim = Simulation::new(config.clone())?;
    run_simulation(&mut sim, out)
}

pub fn run_simulation(sim: &mut Simulation, out: Option<&Path>) -> Result<RunSummary> {
    let config = sim.config.clone();
    let mut writer = match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Some(RecordWriter::create(&dir.join("strokes.csv"))?)
        }
        None => None,
    };
    let stride = config.output.stride.max(1);
    let snapshot = |sim: &Simulation, step: usize| -> Result<()> {
        if let (Some(dir), true) = (out, config.output.vtk && step.is_multiple_of(stride)) {
            fluid_snapshot(sim).write(&dir.join(format!("fluid_{step:05}.vtk")))?;
            solid_snapshot(sim).write(&dir.join(format!("solid_{step:05}.vtk")))?;
        }
        Ok(())
    };

    let mut angles = sim.stroke_angles()?;
    let mut records = vec![record(sim, angles, 0, sim.fluid_quality())?];
    if let Some(w) = writer.as_mut() {
        w.write(&records[0])?;
    }
    snapshot(sim, 0)?;
    let n = sim.num_steps();
    for step in 1..=n {
        let report = sim.advance_time_step()?;
        let (h, t) = sim.stroke_angles().map_err(|e| e.at_step(step))?;
        angles = (unwrap_angle(angles.0, h), unwrap_angle(angles.1, t));
        let r = record(sim, angles, report.iterations, report.min_quality).map_err(|e| e.at_step(step))?;
        if let Some(w) = writer.as_mut() {
            w.write(&r).map_err(|e| e.at_step(step))?;
        }
        records.push(r);
        snapshot(sim, step).map_err(|e| e.at_step(step))?;
    }

    let window = measurement_window(config.time.steps_per_period, n);
    let delta_x = records[window.1].x_cm - records[window.0].x_cm;
    let loop_points: Vec<(f64, f64)> = records[window.0..window.1]
        .iter()
        .map(|r| (r.theta_head, r.theta_tail))
        .collect();
    let area = if loop_points.len() >= 3 { stroke_area(&loop_points)? } else { 0.0 };
    Ok(RunSummary {
        records,
        delta_x,
        stroke_area: area,
        window,
        total_iterations: sim.state.coupling.total_iterations,
        remesh_count: sim.state.remesh_count,
    })
}

/// One (f, E) cell of a sweep; a failed run keeps its error message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub frequency: f64,
    pub young_modulus: f64,
    pub delta_x: Option<f64>,
    pub stroke_area: Option<f64>,
    pub total_iterations: Option<usize>,
    pub error: Option<String>,
}

pub fn cell_directory(root: &Path, frequency: f64, young_modulus: f64) -> PathBuf {
    root.join(format!("f{frequency}_E{young_modulus}"))
}

/// Runs every (f, E) combination of the base config. Cells are independent
/// and run on the current rayon pool; the table is ordered by E, then f.
/// With `out` set, every cell writes into its own directory and the table
/// goes to `sweep.csv`.
pub fn run_frequency_sweep(
    base: &RunConfig,
    frequencies: &[f64],
    young_moduli: &[f64],
    out: Option<&Path>,
) -> Result<Vec<SweepCell>> {
    base.validate()?;
    let cells: Vec<(f64, f64)> = young_moduli
        .iter()
        .flat_map(|&e| frequencies.iter().map(move |&f| (f, e)))
        .collect();
    let mut configs = Vec::with_capacity(cells.len());
    for &(f, e) in &cells {
        let mut cfg = base.clone();
        cfg.field.frequency = f;
        cfg.swimmer.young_modulus = e;
        cfg.validate()?;
        configs.push(cfg);
    }
    let table: Vec<SweepCell> = cells
        .par_iter()
        .zip(configs.par_iter())
        .map(|(&(f, e), cfg)| {
            let dir = out.map(|root| cell_directory(root, f, e));
            match run_single(cfg, dir.as_deref()) {
                Ok(s) => SweepCell {
                    frequency: f,
                    young_modulus: e,
                    delta_x: Some(s.delta_x),
                    stroke_area: Some(s.stroke_area),
                    total_iterations: Some(s.total_iterations),
                    error: None,
                },
                Err(err) => SweepCell {
                    frequency: f,
                    young_modulus: e,
                    delta_x: None,
                    stroke_area: None,
                    total_iterations: None,
                    error: Some(err.to_string()),
                },
            }
        })
        .collect();
    if let Some(root) = out {
        std::fs::create_dir_all(root)?;
        crate::io::write_records(&root.join("sweep.csv"), &table)?;
    }
    Ok(table)
}

/// Ranks starting at 1; tied values share their average rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson correlation of the ranks).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Config(format!("spearman needs two samples of equal length ≥ 2 (got {} and {})", a.len(), b.len())));
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let mean = (a.len() as f64 + 1.0) / 2.0;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - mean) * (y - mean);
        saa += (x - mean) * (x - mean);
        sbb += (y - mean) * (y - mean);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Config("spearman correlation of a constant sample is undefined".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_and_unwrap() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((unwrap_angle(3.1, -3.1) - (2.0 * PI - 3.1)).abs() < 1e-12);
        assert!((unwrap_angle(-3.1, 3.1) + (2.0 * PI - 3.1)).abs() < 1e-12);
    }

    #[test]
    fn windows() {
        assert_eq!(measurement_window(200, 600), (400, 600));
        assert_eq!(measurement_window(200, 800), (400, 600));
        assert_eq!(measurement_window(200, 450), (200, 400));
        assert_eq!(measurement_window(200, 150), (0, 150));
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((spearman(&x, &[10.0, 20.0, 30.0, 40.0, 50.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        // Textbook example: d² = (0,1,1,0,0) gives 1 − 6·2/(5·24) = 0.9.
        assert!((spearman(&x, &[1.0, 3.0, 2.0, 4.0, 5.0]).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(ranks(&[2.0, 1.0, 2.0]), vec![2.5, 1.0, 2.5]);
        assert!(spearman(&x, &[1.0; 5]).is_err());
        assert!(spearman(&x, &x[..3]).is_err());
    }
}
