//! Graded temporal mesh and uniform spatial grid.

use crate::error::{Error, Result};
use crate::real::Real;

/// Time nodes t_n = T (n/N)^r clustered towards t = 0.
#[derive(Debug, Clone)]
pub struct TemporalMesh<T> {
    t_final: T,
    grading: T,
    nodes: Vec<T>,
    /// steps[k] = τ_{k+1} = t_{k+1} - t_k
    steps: Vec<T>,
    /// half_points[k] = t_{k+1/2}
    half_points: Vec<T>,
}

impl<T: Real> TemporalMesh<T> {
    /// Builds the graded mesh with `n_steps` intervals.
    pub fn graded(t_final: T, n_steps: usize, grading: T) -> Result<Self> {
        if !(t_final > T::zero()) || !t_final.is_finite() {
            return Err(Error::invalid("t_final", "must be positive and finite"));
        }
        if n_steps < 2 {
            return Err(Error::invalid("n_steps", format!("need at least 2 steps, got {n_steps}")));
        }
        if !(grading >= T::one()) || !grading.is_finite() {
            return Err(Error::invalid("grading", "graded meshes require r >= 1"));
        }
        let n = T::from_count(n_steps);
        let mut nodes: Vec<T> = (0..=n_steps)
            .map(|k| t_final * (T::from_count(k) / n).powf(grading))
            .collect();
        nodes[0] = T::zero();
        nodes[n_steps] = t_final;
        let steps = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        let half_points = nodes.windows(2).map(|w| (w[0] + w[1]) * T::lit(0.5)).collect();
        Ok(TemporalMesh {
            t_final,
            grading,
            nodes,
            steps,
            half_points,
        })
    }

    pub fn t_final(&self) -> T {
        self.t_final
    }

    pub fn grading(&self) -> T {
        self.grading
    }

    /// Number of intervals N.
    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    /// t_0 ..= t_N
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn node(&self, n: usize) -> T {
        self.nodes[n]
    }

    /// τ_1 ..= τ_N, so `steps()[k]` is τ_{k+1}.
    pub fn steps(&self) -> &[T] {
        &self.steps
    }

    /// τ_n for 1 ≤ n ≤ N.
    pub fn tau(&self, n: usize) -> T {
        self.steps[n - 1]
    }

    /// t_{1/2} ..= t_{N-1/2}
    pub fn half_points(&self) -> &[T] {
        &self.half_points
    }

    /// t_{n+1/2} for 0 ≤ n ≤ N-1.
    pub fn half_point(&self, n: usize) -> T {
        self.half_points[n]
    }

    /// Smallest kernel argument t_{n+1/2} - s met by the history integrals,
    /// i.e. min(τ_1, τ_2/2). The history window at level n starts at τ_{n+1}/2.
    pub fn kernel_window_start(&self) -> T {
        let tau1 = self.steps[0];
        let tau2_half = self.steps[1] * T::lit(0.5);
        tau1.min(tau2_half)
    }

    /// For each step, whether (τ_{n+1}/2)^{2-2α} < 1/3 holds.
    pub fn check_step_condition(&self, alpha: T) -> Vec<bool> {
        let third = T::one() / T::lit(3.0);
        let exponent = T::lit(2.0) - alpha - alpha;
        self.steps
            .iter()
            .map(|&tau| (tau * T::lit(0.5)).powf(exponent) < third)
            .collect()
    }
}

/// Uniform nodes x_i = i h on [0, L].
#[derive(Debug, Clone)]
pub struct SpatialGrid<T> {
    length: T,
    spacing: T,
    nodes: Vec<T>,
}

impl<T: Real> SpatialGrid<T> {
    pub fn uniform(length: T, n_cells: usize) -> Result<Self> {
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::invalid("length", "must be positive and finite"));
        }
        if n_cells < 2 {
            return Err(Error::invalid("n_cells", format!("need at least 2 cells, got {n_cells}")));
        }
        let spacing = length / T::from_count(n_cells);
        let mut nodes: Vec<T> = (0..=n_cells).map(|i| T::from_count(i) * spacing).collect();
        nodes[n_cells] = length;
        Ok(SpatialGrid {
            length,
            spacing,
            nodes,
        })
    }

    pub fn length(&self) -> T {
        self.length
    }

    /// h = L / M
    pub fn spacing(&self) -> T {
        self.spacing
    }

    /// Number of cells M.
    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// x_0 ..= x_M
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }
}
