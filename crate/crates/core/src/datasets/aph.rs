//! Finite-difference reference solution of the rotary air-preheater.
//!
//! Three sectors (gas, primary air, secondary air) each occupy a unit
//! (phi, z) square in local coordinates. Per sector j the metal obeys
//!
//! ```text
//! dT_mj/dphi = NTU_j (T_j - T_mj) + (1/Pe_j) d^2 T_mj / dz^2
//! ```
//!
//! and the fluid obeys `dT_j/dz = NTU_j (T_mj - T_j)` with inlet
//! `T_j(phi, 0) = T_in_j`. The rotating metal couples the sectors:
//!
//! ```text
//! T_m1(0, z) = T_m3(1, 1-z)
//! T_m1(1, z) = T_m2(0, 1-z)
//! T_m2(1, z) = T_m3(0, z)
//! ```
//!
//! with insulated metal ends `dT_mj/dz = 0` at z = 0 and z = 1.
//!
//! Discretization: first-order upwind marching in phi (metal) and z
//! (fluid), second-order central differences for the conduction term, the
//! metal line solved implicitly (tridiagonal) at each phi station. Sectors
//! are swept in rotation order 1 -> 2 -> 3, each picking up the latest exit
//! profile of its upstream neighbor, until the fields stop changing.

use super::DatasetError;

#[derive(Clone, Debug, PartialEq)]
pub struct AphConfig {
    /// Number of transfer units per sector.
    pub ntu: [f64; 3],
    /// Peclet number per sector (conduction strength is 1/Pe).
    pub pe: [f64; 3],
    /// Nondimensional fluid inlet temperatures per sector.
    pub inlet_temps: [f64; 3],
    /// Grid resolution (n_phi, n_z).
    pub grid: (usize, usize),
    pub max_sweeps: usize,
    /// Max-norm change between sweeps below which iteration stops.
    pub tolerance: f64,
}

impl Default for AphConfig {
    fn default() -> Self {
        AphConfig {
            ntu: [5.0, 5.0, 5.0],
            pe: [50.0, 50.0, 50.0],
            inlet_temps: [1.0, 0.0, 0.0],
            grid: (101, 101),
            max_sweeps: 10_000,
            tolerance: 1e-8,
        }
    }
}

impl AphConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        // Rejects NaN and infinities as well as non-positive values.
        let bad = |v: f64| !v.is_finite() || v <= 0.0;
        if self.ntu.iter().copied().any(bad) || self.pe.iter().copied().any(bad) {
            return Err(DatasetError::InvalidConfig("NTU and Pe must be positive".into()));
        }
        if self.inlet_temps.iter().any(|v| !v.is_finite()) {
            return Err(DatasetError::InvalidConfig("inlet temperatures must be finite".into()));
        }
        if self.grid.0 < 16 || self.grid.1 < 16 {
            return Err(DatasetError::InvalidConfig(format!(
                "grid {}x{} is below the 16x16 minimum",
                self.grid.0, self.grid.1
            )));
        }
        if self.max_sweeps == 0 || bad(self.tolerance) {
            return Err(DatasetError::InvalidConfig("sweep cap and tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// The six output fields: fluid and metal temperature per sector, in the
/// dataset's column order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AphField {
    FluidGas,
    MetalGas,
    FluidAir1,
    MetalAir1,
    FluidAir2,
    MetalAir2,
}

impl AphField {
    pub const ALL: [AphField; 6] = [
        AphField::FluidGas,
        AphField::MetalGas,
        AphField::FluidAir1,
        AphField::MetalAir1,
        AphField::FluidAir2,
        AphField::MetalAir2,
    ];

    fn sector(self) -> usize {
        match self {
            AphField::FluidGas | AphField::MetalGas => 0,
            AphField::FluidAir1 | AphField::MetalAir1 => 1,
            AphField::FluidAir2 | AphField::MetalAir2 => 2,
        }
    }

    fn is_metal(self) -> bool {
        matches!(self, AphField::MetalGas | AphField::MetalAir1 | AphField::MetalAir2)
    }
}

/// Converged temperature fields on the (phi, z) grid.
#[derive(Clone, Debug)]
pub struct AphSolution {
    n_phi: usize,
    n_z: usize,
    fluid: [Vec<f64>; 3],
    metal: [Vec<f64>; 3],
    pub sweeps: usize,
    pub final_residual: f64,
}

impl AphSolution {
    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn phi(&self, i: usize) -> f64 {
        i as f64 / (self.n_phi - 1) as f64
    }

    pub fn z(&self, k: usize) -> f64 {
        k as f64 / (self.n_z - 1) as f64
    }

    fn idx(&self, i: usize, k: usize) -> usize {
        i * self.n_z + k
    }

    pub fn value(&self, field: AphField, i: usize, k: usize) -> f64 {
        let grid = if field.is_metal() { &self.metal[field.sector()] } else { &self.fluid[field.sector()] };
        grid[self.idx(i, k)]
    }

    /// Bilinear interpolation at (phi, z) in [0,1]^2.
    pub fn interpolate(&self, field: AphField, phi: f64, z: f64) -> f64 {
        let fi = phi.clamp(0.0, 1.0) * (self.n_phi - 1) as f64;
        let fk = z.clamp(0.0, 1.0) * (self.n_z - 1) as f64;
        let i = (fi.floor() as usize).min(self.n_phi - 2);
        let k = (fk.floor() as usize).min(self.n_z - 2);
        let a = fi - i as f64;
        let b = fk - k as f64;
        let v00 = self.value(field, i, k);
        let v01 = self.value(field, i, k + 1);
        let v10 = self.value(field, i + 1, k);
        let v11 = self.value(field, i + 1, k + 1);
        v00 * (1.0 - a) * (1.0 - b) + v10 * a * (1.0 - b) + v01 * (1.0 - a) * b + v11 * a * b
    }

    /// Max-norm mismatch of the three rotor-continuity conditions.
    pub fn max_interface_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let last = self.n_phi - 1;
        for k in 0..self.n_z {
            let flip = self.n_z - 1 - k;
            let r1 = (self.value(AphField::MetalGas, 0, k)
                - self.value(AphField::MetalAir2, last, flip))
            .abs();
            let r2 = (self.value(AphField::MetalGas, last, k)
                - self.value(AphField::MetalAir1, 0, flip))
            .abs();
            let r3 = (self.value(AphField::MetalAir1, last, k)
                - self.value(AphField::MetalAir2, 0, k))
            .abs();
            worst = worst.max(r1).max(r2).max(r3);
        }
        worst
    }

    /// Largest one-sided z-derivative of any metal field at z = 0 or 1.
    pub fn max_metal_end_gradient(&self) -> f64 {
        let dz = 1.0 / (self.n_z - 1) as f64;
        let mut worst: f64 = 0.0;
        for field in [AphField::MetalGas, AphField::MetalAir1, AphField::MetalAir2] {
            for i in 0..self.n_phi {
                let low = (self.value(field, i, 1) - self.value(field, i, 0)) / dz;
                let high =
                    (self.value(field, i, self.n_z - 1) - self.value(field, i, self.n_z - 2)) / dz;
                worst = worst.max(low.abs()).max(high.abs());
            }
        }
        worst
    }
}

/// Solves a tridiagonal system in place via the Thomas algorithm.
/// `lower[0]` and `upper[n-1]` are ignored.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64], scratch: &mut [f64]) {
    let n = rhs.len();
    scratch[0] = upper[0] / diag[0];
    rhs[0] /= diag[0];
    for k in 1..n {
        let denom = diag[k] - lower[k] * scratch[k - 1];
        scratch[k] = upper[k] / denom;
        rhs[k] = (rhs[k] - lower[k] * rhs[k - 1]) / denom;
    }
    for k in (0..n - 1).rev() {
        rhs[k] -= scratch[k] * rhs[k + 1];
    }
}

/// Runs the sweep iteration to convergence and returns the six fields.
pub fn aph_fd_solve(config: &AphConfig) -> Result<AphSolution, DatasetError> {
    config.validate()?;
    let (n_phi, n_z) = config.grid;
    let d_phi = 1.0 / (n_phi - 1) as f64;
    let dz = 1.0 / (n_z - 1) as f64;
    let idx = |i: usize, k: usize| i * n_z + k;

    // Initialize each sector isothermal at its inlet temperature.
    let mut fluid: [Vec<f64>; 3] = std::array::from_fn(|j| vec![config.inlet_temps[j]; n_phi * n_z]);
    let mut metal: [Vec<f64>; 3] = std::array::from_fn(|j| vec![config.inlet_temps[j]; n_phi * n_z]);

    let mut lower = vec![0.0; n_z];
    let mut diag = vec![0.0; n_z];
    let mut upper = vec![0.0; n_z];
    let mut rhs = vec![0.0; n_z];
    let mut scratch = vec![0.0; n_z];

    let mut residual = f64::INFINITY;
    for sweep in 1..=config.max_sweeps {
        let mut change: f64 = 0.0;
        for j in 0..3 {
            let ntu = config.ntu[j];
            let r = 1.0 / (config.pe[j] * dz * dz);
            // Metal inlet at phi = 0 from the upstream sector's exit.
            // Rotation order 1 -> 2 -> 3 -> 1; sectors 1 and 2 hand over
            // with the z-flip, sector 3 without.
            let upstream = (j + 2) % 3; // 0 <- 2, 1 <- 0, 2 <- 1
            for k in 0..n_z {
                let src_k = if j == 2 { k } else { n_z - 1 - k };
                let v = metal[upstream][idx(n_phi - 1, src_k)];
                let old = metal[j][idx(0, k)];
                change = change.max((v - old).abs());
                metal[j][idx(0, k)] = v;
            }
            // March the metal in phi: implicit line solve, fluid lagged.
            for i in 1..n_phi {
                for k in 0..n_z {
                    if k == 0 {
                        lower[k] = 0.0;
                        diag[k] = 1.0;
                        upper[k] = -1.0;
                        rhs[k] = 0.0;
                    } else if k == n_z - 1 {
                        lower[k] = -1.0;
                        diag[k] = 1.0;
                        upper[k] = 0.0;
                        rhs[k] = 0.0;
                    } else {
                        lower[k] = -r;
                        diag[k] = 1.0 / d_phi + ntu + 2.0 * r;
                        upper[k] = -r;
                        rhs[k] = metal[j][idx(i - 1, k)] / d_phi + ntu * fluid[j][idx(i, k)];
                    }
                }
                solve_tridiagonal(&lower, &diag, &upper, &mut rhs, &mut scratch);
                for k in 0..n_z {
                    let old = metal[j][idx(i, k)];
                    change = change.max((rhs[k] - old).abs());
                    metal[j][idx(i, k)] = rhs[k];
                }
            }
            // March the fluid in z against the fresh metal.
            let denom = 1.0 + dz * ntu;
            for i in 0..n_phi {
                let old = fluid[j][idx(i, 0)];
                change = change.max((config.inlet_temps[j] - old).abs());
                fluid[j][idx(i, 0)] = config.inlet_temps[j];
                for k in 1..n_z {
                    let v = (fluid[j][idx(i, k - 1)] + dz * ntu * metal[j][idx(i, k)]) / denom;
                    let old = fluid[j][idx(i, k)];
                    change = change.max((v - old).abs());
                    fluid[j][idx(i, k)] = v;
                }
            }
        }
        residual = change;
        if change < config.tolerance {
            return Ok(AphSolution {
                n_phi,
                n_z,
                fluid,
                metal,
                sweeps: sweep,
                final_residual: change,
            });
        }
    }
    Err(DatasetError::NoConvergence { residual, sweeps: config.max_sweeps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> AphConfig {
        AphConfig { grid: (33, 33), ..AphConfig::default() }
    }

    #[test]
    fn inlet_condition_is_exact() {
        let sol = aph_fd_solve(&small_config()).unwrap();
        let inlets = [1.0, 0.0, 0.0];
        for (j, field) in [AphField::FluidGas, AphField::FluidAir1, AphField::FluidAir2]
            .iter()
            .enumerate()
        {
            for i in 0..sol.n_phi() {
                assert_eq!(sol.value(*field, i, 0), inlets[j]);
            }
        }
    }

    #[test]
    fn isothermal_inlets_give_constant_fields() {
        let config = AphConfig { inlet_temps: [0.7, 0.7, 0.7], ..small_config() };
        let sol = aph_fd_solve(&config).unwrap();
        for field in AphField::ALL {
            for i in 0..sol.n_phi() {
                for k in 0..sol.n_z() {
                    assert!(
                        (sol.value(field, i, k) - 0.7).abs() < 1e-8,
                        "{field:?} at ({i},{k}) = {}",
                        sol.value(field, i, k)
                    );
                }
            }
        }
    }

    #[test]
    fn converged_solution_satisfies_interfaces_and_insulation() {
        let sol = aph_fd_solve(&small_config()).unwrap();
        assert!(sol.max_interface_residual() < 1e-6, "{}", sol.max_interface_residual());
        // First-order Neumann rows make the one-sided end gradient exactly 0.
        assert!(sol.max_metal_end_gradient() < 1e-3, "{}", sol.max_metal_end_gradient());
    }

    #[test]
    fn fields_stay_within_inlet_bounds() {
        let sol = aph_fd_solve(&small_config()).unwrap();
        for field in AphField::ALL {
            for i in 0..sol.n_phi() {
                for k in 0..sol.n_z() {
                    let v = sol.value(field, i, k);
                    assert!((-1e-9..=1.0 + 1e-9).contains(&v), "{field:?} = {v}");
                }
            }
        }
    }

    #[test]
    fn interior_residual_of_discretized_equations_is_small() {
        // The converged fields should satisfy the upwind/central scheme they
        // were built from, re-evaluated independently here.
        let config = small_config();
        let sol = aph_fd_solve(&config).unwrap();
        let n_phi = sol.n_phi();
        let n_z = sol.n_z();
        let d_phi = 1.0 / (n_phi - 1) as f64;
        let dz = 1.0 / (n_z - 1) as f64;
        let fields = [
            (AphField::MetalGas, AphField::FluidGas, 0usize),
            (AphField::MetalAir1, AphField::FluidAir1, 1),
            (AphField::MetalAir2, AphField::FluidAir2, 2),
        ];
        let mut worst: f64 = 0.0;
        for (m, fl, j) in fields {
            let ntu = config.ntu[j];
            let pe = config.pe[j];
            for i in 1..n_phi {
                for k in 1..n_z - 1 {
                    let lhs = (sol.value(m, i, k) - sol.value(m, i - 1, k)) / d_phi;
                    let cond = (sol.value(m, i, k + 1) - 2.0 * sol.value(m, i, k)
                        + sol.value(m, i, k - 1))
                        / (dz * dz);
                    let rhs = ntu * (sol.value(fl, i, k) - sol.value(m, i, k)) + cond / pe;
                    worst = worst.max((lhs - rhs).abs());
                }
                for k in 1..n_z {
                    let lhs = (sol.value(fl, i, k) - sol.value(fl, i, k - 1)) / dz;
                    let rhs = ntu * (sol.value(m, i, k) - sol.value(fl, i, k));
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        assert!(worst < 1e-6, "scheme residual {worst}");
    }

    #[test]
    fn non_convergence_is_reported() {
        let config = AphConfig { max_sweeps: 2, tolerance: 1e-14, ..small_config() };
        match aph_fd_solve(&config) {
            Err(DatasetError::NoConvergence { sweeps, .. }) => assert_eq!(sweeps, 2),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut config = small_config();
        config.grid = (8, 33);
        assert!(aph_fd_solve(&config).is_err());
        let mut config = small_config();
        config.ntu[1] = 0.0;
        assert!(aph_fd_solve(&config).is_err());
        let mut config = small_config();
        config.pe[2] = -1.0;
        assert!(aph_fd_solve(&config).is_err());
    }

    #[test]
    fn interpolation_matches_grid_nodes() {
        let sol = aph_fd_solve(&small_config()).unwrap();
        for &(i, k) in &[(0usize, 0usize), (5, 7), (32, 32), (16, 1)] {
            let phi = sol.phi(i);
            let z = sol.z(k);
            for field in AphField::ALL {
                let exact = sol.value(field, i, k);
                let interp = sol.interpolate(field, phi, z);
                assert!((exact - interp).abs() < 1e-12);
            }
        }
    }
}
