//! Initial maps for flow runs.

use std::f64::consts::TAU;
use std::sync::Arc;

use collarflow_core::fields::{MapField, TargetSpec};
use collarflow_core::geometry::CollarGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{BaseMap, InitialBlock};
use crate::error::CliError;
use crate::io::read_map_field;

struct Harmonic {
    component: usize,
    amplitude: f64,
    mode: f64,
    phase: f64,
    center: f64,
    width: f64,
}

impl Harmonic {
    fn eval(&self, s: f64, theta: f64) -> f64 {
        self.amplitude * (self.mode * theta + self.phase).cos() * (-((s - self.center) / self.width).powi(2)).exp()
    }
}

fn perturbations(init: &InitialBlock, d: usize, seed: u64) -> Result<Vec<Harmonic>, CliError> {
    let mut out = Vec::new();
    for b in &init.bumps {
        if b.component >= d {
            return Err(CliError::invalid(format!("bump component {} >= dimension {d}", b.component)));
        }
        if !(b.width > 0.0) {
            return Err(CliError::invalid("bump width must be positive"));
        }
        out.push(Harmonic {
            component: b.component,
            amplitude: b.amplitude,
            mode: b.mode as f64,
            phase: b.phase,
            center: b.center,
            width: b.width,
        });
    }
    if let Some(n) = &init.noise {
        if !(n.width > 0.0) {
            return Err(CliError::invalid("noise width must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for component in 0..d {
            for mode in 1..=n.max_mode {
                out.push(Harmonic {
                    component,
                    amplitude: n.amplitude * rng.gen_range(-1.0..1.0) / mode as f64,
                    mode: mode as f64,
                    phase: rng.gen_range(0.0..TAU),
                    center: 0.0,
                    width: n.width,
                });
            }
        }
    }
    Ok(out)
}

/// Builds the initial map on `grid`; a `file` base must live on the same nodes.
pub fn build_initial(
    grid: Arc<CollarGrid>,
    target: &TargetSpec,
    init: &InitialBlock,
    seed: u64,
) -> Result<MapField, CliError> {
    let d = target.dim();
    let extra = perturbations(init, d, seed)?;
    let (base_values, winding): (Box<dyn Fn(usize, usize, f64, f64) -> Vec<f64>>, Vec<f64>) = match &init.base {
        BaseMap::Constant { point } => {
            if point.len() != d {
                return Err(CliError::invalid("constant point has the wrong dimension"));
            }
            let p = point.clone();
            (Box::new(move |_, _, _, _| p.clone()), vec![0.0; d])
        }
        BaseMap::Wrap { amplitude } => {
            let a = *amplitude;
            let mut w = vec![0.0; d];
            w[0] = TAU * a;
            (
                Box::new(move |_, _, _, th| {
                    let mut v = vec![0.0; d];
                    v[0] = a * th;
                    v
                }),
                w,
            )
        }
        BaseMap::Radial { amplitude } => {
            let a = *amplitude;
            (
                Box::new(move |_, _, s, _| {
                    let mut v = vec![0.0; d];
                    v[0] = a * s;
                    v
                }),
                vec![0.0; d],
            )
        }
        BaseMap::Linear { a, b } => {
            if a.len() != d || b.len() != d {
                return Err(CliError::invalid("linear map coefficients have the wrong dimension"));
            }
            let (a, b) = (a.clone(), b.clone());
            let w = b.iter().map(|x| TAU * x).collect();
            (Box::new(move |_, _, s, th| (0..d).map(|k| a[k] * s + b[k] * th).collect()), w)
        }
        BaseMap::Equator => {
            if target.is_flat() || d < 2 {
                return Err(CliError::invalid("equator base needs a sphere target"));
            }
            (
                Box::new(move |_, _, _, th| {
                    let mut v = vec![0.0; d];
                    v[0] = th.cos();
                    v[1] = th.sin();
                    v
                }),
                vec![0.0; d],
            )
        }
        BaseMap::File { path } => {
            let f = read_map_field(path)?;
            if f.target() != target {
                return Err(CliError::invalid("initial field target differs from the flow target"));
            }
            if f.grid().s_nodes() != grid.s_nodes() || f.grid().n_theta() != grid.n_theta() {
                return Err(CliError::invalid("initial field grid differs from the flow grid"));
            }
            let w = f.winding().to_vec();
            (Box::new(move |i, j, _, _| f.at(i, j).to_vec()), w)
        }
    };
    let mut values = Vec::with_capacity(grid.len() * d);
    for (i, &s) in grid.s_nodes().iter().enumerate() {
        for (j, &th) in grid.theta_nodes().iter().enumerate() {
            let mut v = base_values(i, j, s, th);
            for h in &extra {
                v[h.component] += h.eval(s, th);
            }
            target.project(&mut v);
            values.extend_from_slice(&v);
        }
    }
    Ok(MapField::new(grid, target.clone(), values, winding)?)
}
