use std::path::{Path, PathBuf};

use ca_lift::convergence::convergence_probe;
use ca_lift::hamiltonian::HamiltonianBundle;
use ca_lift::lift::{build_evolution, LocalGenerators};
use ca_lift::linalg::{UnitaryEigen, I};
use ca_lift::pattern::{difference_pattern, field_csv, field_pgm};
use ca_lift::random::{random_anti_hermitian, random_diagonal};
use ca_lift::spectral::{
    classical_cycle_decomposition, eigenvalue_csv, phase_multiset_distance, spectrum, vacuum_entanglement,
};
use ca_lift::{Automaton, AutomatonState, DenseOperator, OntologicalBasis, OperatorJson, Rule};
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, GeneratorSource};
use crate::failure::Failure;
use crate::output::RunDir;

/// Tolerance for the cycle-oracle comparison of eigenphases.
const ORACLE_TOL: f64 = 1e-10;

fn compiled(config: &ExperimentConfig) -> Result<(ca_lift::LatticeSpec, Rule), Failure> {
    let spec = config.lattice_spec()?;
    let rule = config.rule_spec()?.compile(&spec)?;
    Ok((spec, rule))
}

fn basis(config: &ExperimentConfig) -> Result<(OntologicalBasis, Rule), Failure> {
    let (spec, rule) = compiled(config)?;
    Ok((OntologicalBasis::new(&spec, config.dim_cap())?, rule))
}

#[derive(Serialize)]
struct Dump {
    step: u64,
    epoch: i64,
    file: String,
}

#[derive(Serialize)]
struct Trajectory {
    extents: Vec<usize>,
    modulus: u32,
    seed: u64,
    epochs: u64,
    reverse: bool,
    final_epoch: i64,
    final_equals_initial: Option<bool>,
    dumps: Vec<Dump>,
}

pub fn run_simulate(config: &ExperimentConfig, root: &Path) -> Result<PathBuf, Failure> {
    let (spec, rule) = compiled(config)?;
    let automaton = Automaton::with_rule(&spec, rule);
    let initial = AutomatonState::random(&spec, config.seed);
    let sim = &config.simulate;
    let mut dir = RunDir::create(root, "simulate", config)?;
    let mut dumps = Vec::new();
    let mut dump = |dir: &mut RunDir, step: u64, state: &AutomatonState| -> Result<(), Failure> {
        let file = format!("states/step_{step:04}.csv");
        dir.write(&file, field_csv(&spec, &state.cells()).as_bytes())?;
        dumps.push(Dump {
            step,
            epoch: state.epoch,
            file,
        });
        Ok(())
    };

    let mut state = initial.clone();
    dump(&mut dir, 0, &state)?;
    let total = if sim.reverse { 2 * sim.epochs } else { sim.epochs };
    for step in 1..=total {
        if step <= sim.epochs {
            automaton.step_in_place(&mut state);
        } else {
            automaton.step_inverse_in_place(&mut state);
        }
        if step % sim.dump_every == 0 || step == total || step == sim.epochs {
            dump(&mut dir, step, &state)?;
        }
    }
    dir.write("initial.pgm", &field_pgm(&spec, &initial.cells()))?;
    dir.write("final.pgm", &field_pgm(&spec, &state.cells()))?;
    let final_equals_initial = sim.reverse.then(|| state == initial);
    let report = Trajectory {
        extents: spec.extents().to_vec(),
        modulus: spec.modulus(),
        seed: config.seed,
        epochs: sim.epochs,
        reverse: sim.reverse,
        final_epoch: state.epoch,
        final_equals_initial,
        dumps,
    };
    dir.write_json("trajectory.json", &report)?;
    if final_equals_initial == Some(false) {
        return Err(Failure::from(ca_lift::Error::InvariantViolated(
            "inverse evolution did not return to the initial state".into(),
        )));
    }
    dir.finish(config, json!({ "final_equals_initial": final_equals_initial }))
}

pub fn run_diff_pattern(config: &ExperimentConfig, root: &Path) -> Result<PathBuf, Failure> {
    let (spec, rule) = compiled(config)?;
    let automaton = Automaton::with_rule(&spec, rule);
    let seed_state = AutomatonState::random(&spec, config.seed);
    let dp = &config.diff_pattern;
    let site = dp
        .site
        .clone()
        .unwrap_or_else(|| spec.extents().iter().map(|&e| (e / 2) as i64).collect());
    let run = difference_pattern(&automaton, &seed_state, &site, dp.delta, dp.epochs)?;
    let mut dir = RunDir::create(root, "diff-pattern", config)?;
    let diff = run.difference_field();
    dir.write_json("diff_pattern.json", &run.report)?;
    dir.write("difference.pgm", &field_pgm(&spec, &diff))?;
    dir.write("difference.csv", field_csv(&spec, &diff).as_bytes())?;
    dir.write("original_final.pgm", &field_pgm(&spec, &run.original.cells()))?;
    dir.write("perturbed_final.pgm", &field_pgm(&spec, &run.perturbed.cells()))?;
    let checks = json!({
        "support_radius": run.report.support_radius,
        "light_cone_bound": run.report.light_cone_bound,
        "within_light_cone": run.report.within_light_cone,
    });
    let path = dir.finish(config, checks)?;
    if !run.report.within_light_cone {
        return Err(Failure::light_cone(format!(
            "support radius {} exceeds {}",
            run.report.support_radius, run.report.light_cone_bound
        )));
    }
    Ok(path)
}

#[derive(Serialize)]
struct LiftReport {
    dim: usize,
    convention: String,
    a_class: String,
    b_class: String,
    u_class: String,
    u_exact_permutation: bool,
    classical_consistency: bool,
}

pub fn run_lift(config: &ExperimentConfig, root: &Path) -> Result<PathBuf, Failure> {
    let (basis, rule) = basis(config)?;
    let evo = build_evolution(&basis, &rule)?;
    let automaton = Automaton::with_rule(basis.spec(), rule);
    let classical_consistency =
        (0..basis.dim()).all(|j| evo.u_images[j] == basis.encode_state(&automaton.step_epoch(&basis.decode_state(j))));
    let report = LiftReport {
        dim: basis.dim(),
        convention: basis.convention().into(),
        a_class: evo.a.classify().to_string(),
        b_class: evo.b.classify().to_string(),
        u_class: evo.u.classify().to_string(),
        u_exact_permutation: evo.u.is_exact_permutation(),
        classical_consistency,
    };
    if !classical_consistency {
        return Err(Failure::from(ca_lift::Error::InvariantViolated(
            "U disagrees with the classical epoch map".into(),
        )));
    }
    let mut dir = RunDir::create(root, "lift", config)?;
    dir.write_json("lift.json", &report)?;
    for (name, op) in [("a", &evo.a), ("b", &evo.b), ("u", &evo.u)] {
        dir.write_json(&format!("{name}.json"), &op.to_json(basis.convention()))?;
        dir.write(&format!("{name}_triplets.csv"), op.to_triplet_csv().as_bytes())?;
    }
    dir.finish(
        config,
        json!({
            "classical_consistency": classical_consistency,
            "u_exact_permutation": report.u_exact_permutation,
        }),
    )
}

fn bundle(config: &ExperimentConfig) -> Result<(OntologicalBasis, Rule, HamiltonianBundle), Failure> {
    let (basis, rule) = basis(config)?;
    let h = &config.hamiltonian;
    let bundle = HamiltonianBundle::build(&basis, &rule, h.order, &h.generator_offsets, &h.branch_offsets)?;
    bundle.verify()?;
    Ok((basis, rule, bundle))
}

fn bundle_checks(bundle: &HamiltonianBundle) -> serde_json::Value {
    json!({
        "assembly_identity": bundle.checks.assembly_ok(),
        "reconstruction": bundle.checks.reconstruction_ok(),
        "values": bundle.checks,
    })
}

pub fn run_hamiltonian(config: &ExperimentConfig, root: &Path) -> Result<PathBuf, Failure> {
    let (basis, _, bundle) = bundle(config)?;
    let mut dir = RunDir::create(root, "hamiltonian", config)?;
    dir.write_json(
        "hamiltonian.json",
        &bundle.to_report(&basis, config.hamiltonian.include_local_terms),
    )?;
    dir.write(
        "exact_spectrum.csv",
        eigenvalue_csv(&bundle.exact.eigenvalues).as_bytes(),
    )?;
    dir.finish(config, bundle_checks(&bundle))
}

#[derive(Serialize)]
struct OracleReport {
    #[serde(flatten)]
    oracle: ca_lift::spectral::CycleOracle,
    unitary_phases: Vec<f64>,
    max_phase_distance: f64,
    tolerance: f64,
    matches: bool,
}

/// Default cut: the first half of the lattice along axis 0.
fn default_cut(spec: &ca_lift::LatticeSpec) -> Vec<usize> {
    let half = spec.extents()[0] / 2;
    (0..spec.cell_count()).filter(|&s| spec.coord_of(s)[0] < half).collect()
}

pub fn run_spectrum(config: &ExperimentConfig, root: &Path) -> Result<PathBuf, Failure> {
    let (basis, rule, bundle) = bundle(config)?;
    let report = spectrum(&bundle)?;
    let sc = &config.spectrum;
    let mut checks = serde_json::Map::new();
    checks.insert("density_bound_holds".into(), json!(report.density_bound_holds));
    let oracle = if sc.cycle_oracle {
        let oracle = classical_cycle_decomposition(&basis, &rule)?;
        let phases = UnitaryEigen::new(&bundle.u)?.phases;
        let distance = phase_multiset_distance(&phases, &oracle.predicted_phases)?;
        let matches = distance <= ORACLE_TOL;
        checks.insert("cycle_oracle_matches".into(), json!(matches));
        if !matches {
            return Err(Failure::from(ca_lift::Error::InvariantViolated(format!(
                "eigenphases of U differ from the cycle oracle by {distance:e}"
            ))));
        }
        Some(OracleReport {
            oracle,
            unitary_phases: phases,
            max_phase_distance: distance,
            tolerance: ORACLE_TOL,
            matches,
        })
    } else {
        None
    };
    let entanglement = if sc.entanglement {
        let cut = sc.cut.clone().unwrap_or_else(|| default_cut(basis.spec()));
        let e = vacuum_entanglement(&bundle, &basis, &cut)?;
        checks.insert("entropy_nats".into(), json!(e.entropy_nats));
        Some(e)
    } else {
        None
    };
    let mut dir = RunDir::create(root, "spectrum", config)?;
    dir.write_json("spectrum.json", &report)?;
    dir.write("spectrum.csv", report.to_csv().as_bytes())?;
    if let Some(o) = &oracle {
        dir.write_json("cycle_oracle.json", o)?;
    }
    if let Some(e) = &entanglement {
        dir.write_json("entanglement.json", e)?;
    }
    dir.finish(config, serde_json::Value::Object(checks))
}

pub fn run_converge(config: &ExperimentConfig, root: &Path) -> Result<PathBuf, Failure> {
    let cc = &config.converge;
    let (p, q) = match cc.generators {
        GeneratorSource::Automaton => {
            let (basis, rule) = basis(config)?;
            let gens = LocalGenerators::build(&basis, &rule, &config.hamiltonian.generator_offsets)?;
            (gens.a_total() * (-I), gens.b_total() * (-I))
        }
        GeneratorSource::Random => (
            random_anti_hermitian(cc.dim, config.seed),
            random_anti_hermitian(cc.dim, config.seed.wrapping_add(1)),
        ),
        GeneratorSource::RandomCommuting => (
            random_diagonal(cc.dim, config.seed) * I,
            random_diagonal(cc.dim, config.seed.wrapping_add(1)) * I,
        ),
    };
    let report = convergence_probe(&p, &q, &cc.eps, &cc.orders)?;
    let mut dir = RunDir::create(root, "converge", config)?;
    dir.write_json("converge.json", &report)?;
    dir.write("converge.csv", report.to_csv().as_bytes())?;
    dir.finish(
        config,
        json!({
            "commuting": report.commuting,
            "divergence_onset": report.divergence_onset,
        }),
    )
}

#[derive(Debug, Serialize)]
pub struct ClassifyReport {
    pub dim: usize,
    pub class: String,
    pub exact_permutation: bool,
    pub tolerance: f64,
}

pub fn run_classify(path: &Path, tolerance: Option<f64>) -> Result<ClassifyReport, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::operator_io(format!("{}: {e}", path.display())))?;
    let json: OperatorJson =
        serde_json::from_str(&text).map_err(|e| Failure::operator_io(format!("{}: {e}", path.display())))?;
    let mut op = DenseOperator::from_json(&json)?;
    if let Some(t) = tolerance {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Failure::invalid_config("tolerance must be finite and non-negative"));
        }
        op = op.with_tolerance(t);
    }
    Ok(ClassifyReport {
        dim: op.dim(),
        class: op.classify().to_string(),
        exact_permutation: op.is_exact_permutation(),
        tolerance: op.tolerance,
    })
}
