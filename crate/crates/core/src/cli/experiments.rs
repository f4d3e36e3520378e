//! One function per experiment: config in, tables and results out.

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{
    DickeCriticalConfig, EdBoundaryConfig, ExperimentConfig, Fe8BoundaryConfig, Grid, IsingPhaseDiagramConfig,
    LambdaBarConfig, TransmissionMapConfig,
};
use super::output::{Cell, Provenance, Table};
use crate::error::{Error, Result};
use crate::hamiltonian::{CavitySpec, Geometry, GiantSpinModel, Material};
use crate::meanfield::{solve_selfconsistent, MeanFieldModel, MeanFieldProblem, Sublattices};
use crate::phase::{trace_boundary, Axis, BoundaryPoint, DetectorSpec, Fixed, OrderKind, Plane, SweepSpec, Var};
use crate::response::{dicke_critical_coupling, dicke_critical_omega_z, lambda_bar_from_material};
use crate::transmission::transmission_map;
use crate::units::{per_cm3_to_per_m3, Thermal, SI};

/// Everything an experiment hands back to the writer.
#[derive(Debug, Default)]
pub struct Outputs {
    pub tables: Vec<Table>,
    pub internal: Value,
    pub results: Value,
    pub warnings: Vec<String>,
    pub provenance: Vec<Provenance>,
}

pub fn run_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<Outputs> {
    if let Some(c) = &cfg.dicke_critical {
        return dicke_critical(c);
    }
    if let Some(c) = &cfg.lambda_bar {
        return lambda_bar(c);
    }
    if let Some(c) = &cfg.ising_phase_diagram {
        return ising_phase_diagram(c);
    }
    if let Some(c) = &cfg.ed_boundary {
        return ed_boundary(c, seed);
    }
    if let Some(c) = &cfg.fe8_boundary {
        return fe8_boundary(c);
    }
    if let Some(c) = &cfg.transmission_map {
        return transmission(c);
    }
    Err(Error::invalid(format!("no section for experiment {}", cfg.experiment.name())))
}

fn thermal_k(kelvin: f64) -> Result<Thermal> {
    Thermal::from_kelvin(kelvin, &SI)
}

fn material_cavity(omega: f64, rho_per_cm3: f64, nu: f64) -> Result<CavitySpec> {
    CavitySpec::from_material(omega, Material { rho: per_cm3_to_per_m3(rho_per_cm3), nu }, &SI)
}

fn axis(var: Var, g: &Grid, scale: f64, key: &str) -> Result<Axis> {
    g.validate(key)?;
    Ok(Axis::linear(var, g.min * scale, g.max * scale, g.points))
}

const BOUNDARY_COLUMNS: [(&str, &str); 6] = [
    ("lambda_c_per_s", "rad/s"),
    ("width_per_s", "rad/s"),
    ("ordered_above", "1"),
    ("flagged", "1"),
    ("error", "1"),
    ("detector", "1"),
];

fn boundary_cells(p: &BoundaryPoint) -> Vec<Cell> {
    vec![
        p.critical.into(),
        p.width.into(),
        p.ordered_above.map_or(Cell::Empty, Cell::Bool),
        p.flagged.into(),
        p.error.as_deref().map_or(Cell::Empty, Cell::from),
        p.detector.into(),
    ]
}

fn boundary_warnings(points: &[BoundaryPoint], what: &str) -> Vec<String> {
    points
        .iter()
        .filter(|p| p.flagged || p.error.is_some())
        .map(|p| match &p.error {
            Some(e) => format!("{what}: slice {:e} failed: {e}", p.slice),
            None => format!("{what}: slice {:e} contains unconverged or truncated probes", p.slice),
        })
        .collect()
}

fn dicke_critical(c: &DickeCriticalConfig) -> Result<Outputs> {
    let mut t = Table::new(
        "critical",
        &[("temperature_k", "K"), ("thermal_per_s", "rad/s"), ("lambda_c_per_s", "rad/s")],
    );
    let mut results = Vec::new();
    for &tk in &c.temperatures_k {
        let th = thermal_k(tk)?;
        let lc = dicke_critical_coupling(c.omega_z_per_s, c.omega_per_s, c.spin, th)?;
        t.push(vec![tk.into(), th.energy().into(), lc.into()]);
        results.push(json!({ "temperature_k": tk, "lambda_c_per_s": lc }));
    }
    Ok(Outputs {
        tables: vec![t],
        internal: json!({
            "thermal_per_s": c.temperatures_k.iter().map(|&k| SI.kelvin_to_rad_s(k)).collect::<Vec<_>>(),
        }),
        results: json!({ "critical_couplings": results }),
        ..Default::default()
    })
}

fn lambda_bar(c: &LambdaBarConfig) -> Result<Outputs> {
    let mut t = Table::new(
        "lambda_bar",
        &[
            ("filling_factor", "1"),
            ("lambda_bar_per_s", "rad/s"),
            ("lambda_bar_over_omega", "1"),
            ("tc0_spin_half_k", "K"),
        ],
    );
    let rho = per_cm3_to_per_m3(c.rho_per_cm3);
    let mut results = Vec::new();
    for &nu in &c.filling_factors {
        let l = lambda_bar_from_material(rho, nu, c.omega_per_s, &SI)?;
        // ω_z → 0 limit of the spin-1/2 closed form: k_BT_c = 2λ̄²/Ω.
        let tc0 = SI.rad_s_to_kelvin(2.0 * l * l / c.omega_per_s);
        t.push(vec![nu.into(), l.into(), (l / c.omega_per_s).into(), tc0.into()]);
        results.push(json!({ "filling_factor": nu, "lambda_bar_per_s": l }));
    }
    Ok(Outputs {
        tables: vec![t],
        internal: json!({ "rho_per_m3": rho }),
        results: json!({ "lambda_bar": results }),
        ..Default::default()
    })
}

fn ising_phase_diagram(c: &IsingPhaseDiagramConfig) -> Result<Outputs> {
    c.j_per_s.validate("j_per_s")?;
    c.lambda_bar_per_s.validate("lambda_bar_per_s")?;
    let th = thermal_k(c.temperature_k)?;
    let base = CavitySpec::new(c.omega_per_s, 0.0)?;
    let model = |j: f64| MeanFieldModel::Ising { omega_z: c.omega_z_per_s, j, geometry: c.geometry };

    let js = c.j_per_s.values();
    let lambdas = c.lambda_bar_per_s.values();
    let cells: Vec<(f64, f64)> = js.iter().flat_map(|&j| lambdas.iter().map(move |&l| (j, l))).collect();
    let sols = cells
        .par_iter()
        .map(|&(j, l)| {
            let p = MeanFieldProblem::new(model(j), CavitySpec { lambda_bar: l, ..base }, th, c.sublattices);
            solve_selfconsistent(&p)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut grid = Table::new(
        "grid",
        &[
            ("j_per_s", "rad/s"),
            ("lambda_bar_per_s", "rad/s"),
            ("m_uniform", "1"),
            ("m_staggered", "1"),
            ("sz", "1"),
            ("photons_per_spin", "1"),
            ("alpha_per_sqrt_n", "1"),
            ("free_energy_per_spin_per_s", "rad/s"),
            ("converged", "1"),
            ("iterations", "1"),
        ],
    );
    let mut warnings = Vec::new();
    for (&(j, l), s) in cells.iter().zip(&sols) {
        if !s.converged {
            warnings.push(format!("mean field unconverged at J = {j:e}, λ̄ = {l:e} (residual {:e})", s.residual));
        }
        grid.push(vec![
            j.into(),
            l.into(),
            s.m_uniform.into(),
            s.m_stag.into(),
            s.sz.into(),
            s.photons_per_spin.into(),
            s.alpha_per_sqrt_n.into(),
            s.free_energy_per_spin.into(),
            s.converged.into(),
            s.iterations.into(),
        ]);
    }

    let orders: &[OrderKind] = match c.sublattices {
        Sublattices::One => &[OrderKind::Uniform],
        Sublattices::Two => &[OrderKind::Uniform, OrderKind::Staggered],
    };
    let mut boundary = Table::new(
        "boundary",
        &[[("order", "1"), ("j_per_s", "rad/s")].as_slice(), &BOUNDARY_COLUMNS].concat(),
    );
    for &order in orders {
        let spec = SweepSpec {
            plane: Plane::JVsLambda,
            fixed: Fixed { model: model(0.0), cavity: base, thermal: th, consts: SI },
            slice: axis(Var::J, &c.j_per_s, 1.0, "j_per_s")?,
            scan: axis(Var::LambdaBar, &c.lambda_bar_per_s, 1.0, "lambda_bar_per_s")?,
            detector: DetectorSpec::MeanFieldOrderParameter { threshold: c.threshold, sublattices: c.sublattices, order },
            bisection_tol: c.bisection_tol,
        };
        let b = trace_boundary(&spec)?;
        let label = match order {
            OrderKind::Uniform => "uniform",
            OrderKind::Staggered => "staggered",
        };
        warnings.extend(boundary_warnings(&b.points, label));
        for p in &b.points {
            boundary.push([vec![label.into(), p.slice.into()], boundary_cells(p)].concat());
        }
    }
    Ok(Outputs {
        tables: vec![grid, boundary],
        internal: json!({ "thermal_per_s": th.energy(), "cavity_shift_per_lambda2": 4.0 / c.omega_per_s }),
        results: json!({
            "grid_points": cells.len(),
            "unconverged": sols.iter().filter(|s| !s.converged).count()
        }),
        warnings,
        ..Default::default()
    })
}

fn ed_boundary(c: &EdBoundaryConfig, seed: u64) -> Result<Outputs> {
    let th = thermal_k(c.temperature_k)?;
    let spec = SweepSpec {
        plane: Plane::JVsLambda,
        fixed: Fixed {
            model: MeanFieldModel::Ising { omega_z: c.omega_z_per_s, j: 0.0, geometry: Geometry::NearestNeighborPbc },
            cavity: CavitySpec::new(c.omega_per_s, 0.0)?,
            thermal: th,
            consts: SI,
        },
        slice: axis(Var::J, &c.j_per_s, 1.0, "j_per_s")?,
        scan: axis(Var::LambdaBar, &c.lambda_bar_per_s, 1.0, "lambda_bar_per_s")?,
        detector: DetectorSpec::ResponseCriterion { n_sites: c.n_sites, krylov_dim: c.krylov_dim, seed },
        bisection_tol: c.bisection_tol,
    };
    let b = trace_boundary(&spec)?;
    let mut t = Table::new("boundary", &[[("j_per_s", "rad/s")].as_slice(), &BOUNDARY_COLUMNS].concat());
    for p in &b.points {
        t.push([vec![p.slice.into()], boundary_cells(p)].concat());
    }
    let free = dicke_critical_coupling(c.omega_z_per_s, c.omega_per_s, 0.5, th)?;
    Ok(Outputs {
        tables: vec![t],
        internal: json!({ "thermal_per_s": th.energy() }),
        results: json!({ "free_spin_lambda_c_per_s": free }),
        warnings: boundary_warnings(&b.points, "response criterion"),
        ..Default::default()
    })
}

fn fe8_boundary(c: &Fe8BoundaryConfig) -> Result<Outputs> {
    let model = GiantSpinModel {
        s: c.spin,
        d: SI.kelvin_to_rad_s(c.d_k),
        e: SI.kelvin_to_rad_s(c.e_k),
        b_mag: 0.0,
        phi: c.phi_deg.to_radians(),
        j: SI.kelvin_to_rad_s(c.j_k),
    };
    model.validate()?;
    let kt = SI.kelvin_to_rad_s(1.0);
    let t_axis = axis(Var::T, &c.temperature_k, kt, "temperature_k")?;
    let b_axis = axis(Var::B, &c.field_t, 1.0, "field_t")?;
    let detector =
        DetectorSpec::MeanFieldOrderParameter { threshold: c.threshold, sublattices: Sublattices::One, order: OrderKind::Uniform };

    let mut t = Table::new(
        "boundary",
        &[
            ("filling_factor", "1"),
            ("sweep", "1"),
            ("temperature_k", "K"),
            ("field_t", "T"),
            ("width", "K or T (scan variable)"),
            ("ordered_above", "1"),
            ("flagged", "1"),
            ("error", "1"),
        ],
    );
    let mut results = Vec::new();
    let mut warnings = Vec::new();
    let mut lambdas = Vec::new();
    for &nu in &c.filling_factors {
        let cavity = material_cavity(c.omega_per_s, c.rho_per_cm3, nu)?;
        lambdas.push(cavity.lambda_bar);
        let fixed = Fixed { model: MeanFieldModel::GiantSpin(model.clone()), cavity, thermal: Thermal::ZERO, consts: SI };
        let sweep = |slice: Axis, scan: Axis| {
            trace_boundary(&SweepSpec {
                plane: Plane::BVsT,
                fixed: fixed.clone(),
                slice,
                scan,
                detector: detector.clone(),
                bisection_tol: c.bisection_tol,
            })
        };
        let b_of_t = sweep(t_axis, b_axis)?;
        let t_of_b = sweep(b_axis, t_axis)?;
        for p in &b_of_t.points {
            t.push(vec![
                nu.into(),
                "field_at_temperature".into(),
                (p.slice / kt).into(),
                p.critical.into(),
                p.width.into(),
                p.ordered_above.map_or(Cell::Empty, Cell::Bool),
                p.flagged.into(),
                p.error.as_deref().map_or(Cell::Empty, Cell::from),
            ]);
        }
        for p in &t_of_b.points {
            t.push(vec![
                nu.into(),
                "temperature_at_field".into(),
                p.critical.map(|x| x / kt).into(),
                p.slice.into(),
                (p.width / kt).into(),
                p.ordered_above.map_or(Cell::Empty, Cell::Bool),
                p.flagged.into(),
                p.error.as_deref().map_or(Cell::Empty, Cell::from),
            ]);
        }
        warnings.extend(boundary_warnings(&b_of_t.points, &format!("ν = {nu}, B_c(T)")));
        warnings.extend(boundary_warnings(&t_of_b.points, &format!("ν = {nu}, T_c(B)")));
        results.push(json!({
            "filling_factor": nu,
            "lambda_bar_per_s": cavity.lambda_bar,
            "tc_k_at_lowest_field": t_of_b.points.first().and_then(|p| p.critical).map(|x| x / kt),
            "bc_t_at_lowest_temperature": b_of_t.points.first().and_then(|p| p.critical),
        }));
    }
    let mut provenance = vec![
        Provenance { quantity: "Fe8 T_c(B=0), no cavity".into(), value: 0.6, unit: "K", tag: "literature" },
        Provenance { quantity: "Fe8 B_c(T→0), no cavity".into(), value: 2.65, unit: "T", tag: "literature" },
    ];
    for (nu, tc) in [0.0, 0.1, 0.25, 0.5, 1.0].iter().zip(FE8_TC_FROZEN) {
        provenance.push(Provenance {
            quantity: format!("Fe8 T_c(B=0), ν = {nu}, ρ = 5.1e20 cm⁻³, Ω = 1.4e9 s⁻¹"),
            value: tc,
            unit: "K",
            tag: "frozen-regression",
        });
    }
    Ok(Outputs {
        tables: vec![t],
        internal: json!({
            "d_per_s": model.d,
            "e_per_s": model.e,
            "j_per_s": model.j,
            "phi_rad": model.phi,
            "lambda_bar_per_s": lambdas,
            "temperature_per_s": { "min": t_axis.min, "max": t_axis.max },
            "field_zeeman_per_s_per_t": SI.tesla_to_rad_s(1.0),
        }),
        results: json!({ "per_filling_factor": results }),
        warnings,
        provenance,
    })
}

/// Pinned mean-field T_c(B = 0) of the Fe8 parameter set, kelvin.
pub const FE8_TC_FROZEN: [f64; 5] = [0.5691682946, 0.7285691114, 0.9672119767, 1.3617359866, 2.1281138994];

fn transmission(c: &TransmissionMapConfig) -> Result<Outputs> {
    c.probe_per_s.validate("probe_per_s")?;
    c.omega_z_per_s.validate("omega_z_per_s")?;
    let cavity = material_cavity(c.omega_per_s, c.rho_per_cm3, c.filling_factor)?;
    let th = thermal_k(c.temperature_k)?;
    let w = c.probe_per_s.values();
    let wz = c.omega_z_per_s.values();
    let g = transmission_map(&w, &wz, th, &cavity, c.kappa_per_s, c.gamma_per_s)?;

    let mut map = Table::new(
        "map",
        &[
            ("omega_z_per_s", "rad/s"),
            ("probe_per_s", "rad/s"),
            ("re_t", "1"),
            ("im_t", "1"),
            ("abs_t", "1"),
        ],
    );
    for (i, row) in g.t.iter().enumerate() {
        for (k, z) in row.iter().enumerate() {
            map.push(vec![wz[i].into(), w[k].into(), z.re.into(), z.im.into(), z.norm().into()]);
        }
    }
    let mut cols = Table::new(
        "columns",
        &[
            ("omega_z_per_s", "rad/s"),
            ("sz0", "1"),
            ("sx0", "1"),
            ("superradiant", "1"),
            ("mean_field_converged", "1"),
        ],
    );
    for col in &g.columns {
        cols.push(vec![
            col.omega_z.into(),
            col.sz0.into(),
            col.sx0.into(),
            col.superradiant.into(),
            col.mean_field_converged.into(),
        ]);
    }
    let wzc = dicke_critical_omega_z(cavity.lambda_bar, cavity.omega, 0.5, th)?;
    let tc0 = 2.0 * cavity.lambda_bar * cavity.lambda_bar / cavity.omega;
    Ok(Outputs {
        tables: vec![map, cols],
        internal: json!({
            "lambda_bar_per_s": cavity.lambda_bar,
            "thermal_per_s": th.energy(),
            "rho_per_m3": per_cm3_to_per_m3(c.rho_per_cm3),
        }),
        results: json!({
            "omega_z_critical_per_s": wzc,
            "tc0_k": SI.rad_s_to_kelvin(tc0),
            "temperature_over_tc0": th.energy() / tc0,
            "superradiant_columns": g.columns.iter().filter(|c| c.superradiant).count(),
        }),
        warnings: g.columns.iter().filter_map(|c| c.warning.clone()).collect(),
        ..Default::default()
    })
}
