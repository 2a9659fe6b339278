//! Subcommand implementations.

use anyhow::{anyhow, bail};
use schwinger_core::nalgebra::DMatrix;
use schwinger_core::num_complex::Complex64;

use schwinger_core::embed::{
    brute_force_search, embedding_objective, greedy_local_search, pad_dimension,
    FOUR_SITE_OPTIMAL_PERMUTATION,
};
use schwinger_core::green::{
    density_series, lesser_green, trotter_green_oracle, CircuitRun, DensityMethod, GreenMethod,
    MitigationChoice, TrexOptions, ZneOptions,
};
use schwinger_core::lattice::{
    build_hamiltonian, electric_eigenvalue, enumerate_basis, Couplings, GaugeConfig, LatticeSpec,
};
use schwinger_core::model::EmbeddedModel;
use schwinger_core::pauli::PauliDecomposition;
use schwinger_core::rng::stream_seed;
use schwinger_core::sim::{NoiseModel, ReadoutNoise};
use schwinger_core::symmetry::{sector_decompose, vacuum_sector, SectorBlock};
use schwinger_core::trotter::trotter_step;

use crate::config::ExperimentConfig;
use crate::output::{fmt_f64, fmt_time, Csv, OutputDir};
use crate::{Method, PhiConvention, SearchMode};

fn lattice_spec(config: &ExperimentConfig) -> anyhow::Result<LatticeSpec> {
    Ok(LatticeSpec::with_filling(
        config.lattice.num_sites,
        config.lattice.group_order,
        config.filling(),
    )?)
}

fn couplings(config: &ExperimentConfig) -> Couplings {
    Couplings::new(config.couplings.xi, config.couplings.mu)
}

fn noise_model(config: &ExperimentConfig) -> NoiseModel {
    NoiseModel {
        p1: config.noise.p1,
        p2: config.noise.p2,
        p3: config.noise.p3,
        readout: ReadoutNoise::UniformFlip(config.noise.readout_flip),
    }
}

struct SectorPipeline {
    spec: LatticeSpec,
    basis: Vec<GaugeConfig>,
    blocks: Vec<SectorBlock>,
    vacuum_block: usize,
}

fn sector_pipeline(config: &ExperimentConfig) -> anyhow::Result<SectorPipeline> {
    let spec = lattice_spec(config)?;
    let basis = enumerate_basis(&spec);
    let h = build_hamiltonian(&basis, &couplings(config), &spec)?;
    let blocks = sector_decompose(&basis, &spec, &h)?;
    let (vacuum, _) = vacuum_sector(&blocks, &basis, &spec)?;
    let vacuum_label = vacuum.label;
    let vacuum_block = blocks.iter().position(|b| b.label == vacuum_label).unwrap();
    Ok(SectorPipeline { spec, basis, blocks, vacuum_block })
}

fn resolve_permutation(
    config: &ExperimentConfig,
    vacuum: &DMatrix<Complex64>,
) -> anyhow::Result<Vec<usize>> {
    let dim = pad_dimension(vacuum.nrows());
    match config.embedding.mode.as_str() {
        "paper" => {
            if dim != 8 {
                bail!(
                    "the tabulated optimal permutation applies to the eight-state embedding; \
                     use embedding.mode = \"brute\", \"greedy\" or \"fixed\" for this lattice"
                );
            }
            Ok(FOUR_SITE_OPTIMAL_PERMUTATION.iter().map(|&p| p - 1).collect())
        }
        "identity" => Ok((0..dim).collect()),
        "brute" => Ok(brute_force_search(vacuum)?.embedding.permutation().to_vec()),
        "greedy" => Ok(greedy_local_search(vacuum, config.embedding.restarts, config.embedding.seed)?
            .permutation()
            .to_vec()),
        "fixed" => {
            let fixed = config
                .embedding
                .fixed_permutation
                .as_ref()
                .ok_or_else(|| anyhow!("embedding.fixed_permutation missing"))?;
            Ok(fixed.iter().map(|&p| p.wrapping_sub(1)).collect())
        }
        other => bail!("unknown embedding mode {other:?}"),
    }
}

fn build_model(config: &ExperimentConfig) -> anyhow::Result<EmbeddedModel> {
    let pipeline = sector_pipeline(config)?;
    let vacuum = &pipeline.blocks[pipeline.vacuum_block].hamiltonian;
    let permutation = resolve_permutation(config, vacuum)?;
    Ok(EmbeddedModel::build(pipeline.spec, couplings(config), &permutation)?)
}

fn circuit_run(config: &ExperimentConfig, method: Method, conjugate_phase: bool) -> CircuitRun {
    let shots = if config.run.shots == 0 { None } else { Some(config.run.shots) };
    let noise = Some(noise_model(config));
    let base = CircuitRun {
        dt: config.trotter.dt,
        noise: None,
        shots,
        seed: config.run.seed,
        mitigation: MitigationChoice::None,
        conjugate_phase,
    };
    match method {
        Method::Exact | Method::Trotter => base,
        Method::Noisy => CircuitRun { noise, ..base },
        Method::Trex => CircuitRun {
            noise,
            mitigation: MitigationChoice::Trex(TrexOptions {
                num_twirls: config.mitigation.trex.twirls,
                calibration_shots: config.mitigation.trex.shots,
            }),
            ..base
        },
        Method::Zne => CircuitRun {
            noise,
            mitigation: MitigationChoice::Zne(ZneOptions {
                scales: config.mitigation.zne.scales.clone(),
                model: config.fit_model().expect("validated"),
            }),
            ..base
        },
    }
}

fn method_name(method: Method) -> &'static str {
    match method {
        Method::Exact => "exact",
        Method::Trotter => "trotter",
        Method::Noisy => "noisy",
        Method::Trex => "trex",
        Method::Zne => "zne",
    }
}

fn time_grid(t_max: f64, step: f64) -> Vec<f64> {
    let count = (t_max / step + 0.5).floor() as usize;
    (0..=count).map(|k| k as f64 * step).collect()
}

/// Grid s, s + step, ... up to t_max, anchored on the dt lattice.
fn offset_grid(s: f64, t_max: f64, step: f64, dt: f64) -> Vec<f64> {
    let base = (s / dt).round() as usize;
    let stride = (step / dt).round().max(1.0) as usize;
    let mut out = Vec::new();
    let mut k = base;
    while k as f64 * dt <= t_max + 1e-9 {
        out.push(k as f64 * dt);
        k += stride;
    }
    out
}

fn join_indices(values: &[usize]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("-")
}

pub fn cmd_basis(config: &ExperimentConfig, out: &mut OutputDir) -> anyhow::Result<()> {
    let spec = lattice_spec(config)?;
    let basis = enumerate_basis(&spec);
    let mut csv = Csv::new("index,fields,occupations,electric_energy,staggered_mass");
    for (i, config_state) in basis.iter().enumerate() {
        csv.row(&[
            i.to_string(),
            join_indices(&config_state.field_indices),
            config_state.occupations.iter().map(|b| b.to_string()).collect::<Vec<_>>().join("-"),
            fmt_f64(config_state.electric_energy(spec.group_order)),
            config_state.staggered_mass().to_string(),
        ]);
    }
    out.write_text("basis.csv", &csv.finish())?;
    println!(
        "{} gauge-invariant configurations for N={}, n={}, filling {}",
        basis.len(),
        spec.num_sites,
        spec.group_order,
        spec.filling
    );
    for k in 0..spec.group_order.min(5) {
        println!("  e_{k} = {}", electric_eigenvalue(k, spec.group_order)?);
    }
    out.write_manifest("basis", config, 0)?;
    Ok(())
}

fn complex_matrix_json(m: &DMatrix<Complex64>) -> serde_json::Value {
    let rows: Vec<Vec<Vec<f64>>> = (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| vec![m[(r, c)].re, m[(r, c)].im]).collect())
        .collect();
    serde_json::json!(rows)
}

pub fn cmd_sectors(config: &ExperimentConfig, out: &mut OutputDir) -> anyhow::Result<()> {
    let pipeline = sector_pipeline(config)?;
    let blocks: Vec<serde_json::Value> = pipeline
        .blocks
        .iter()
        .enumerate()
        .map(|(i, block)| {
            serde_json::json!({
                "label": block.label.to_string(),
                "dimension": block.dim(),
                "contains_vacuum": i == pipeline.vacuum_block,
                "hamiltonian": complex_matrix_json(&block.hamiltonian),
            })
        })
        .collect();
    let value = serde_json::json!({
        "num_sites": pipeline.spec.num_sites,
        "group_order": pipeline.spec.group_order,
        "filling": pipeline.spec.filling,
        "xi": config.couplings.xi,
        "mu": config.couplings.mu,
        "basis_size": pipeline.basis.len(),
        "blocks": blocks,
    });
    out.write_json("sectors.json", &value)?;
    let dims: Vec<usize> = pipeline.blocks.iter().map(|b| b.dim()).collect();
    println!("sector dimensions: {dims:?}");
    out.write_manifest("sectors", config, 0)?;
    Ok(())
}

fn coefficient_csv(decomposition: &PauliDecomposition) -> String {
    let mut csv = Csv::new("indices,pauli,coefficient,weight");
    for (string, &value) in &decomposition.terms {
        csv.row(&[
            string.indices().iter().map(|i| i.to_string()).collect::<String>(),
            string.to_string(),
            fmt_f64(value),
            string.weight().to_string(),
        ]);
    }
    csv.finish()
}

pub fn cmd_decompose(config: &ExperimentConfig, out: &mut OutputDir) -> anyhow::Result<()> {
    let model = build_model(config)?;
    out.write_text("coefficients.csv", &coefficient_csv(&model.coefficients))?;
    out.write_text("density_coefficients.csv", &coefficient_csv(&model.density.decomposition))?;
    println!(
        "embedding {:?}: {} non-identity terms, {} full weight",
        model.embedding.one_indexed(),
        model.coefficients.num_non_identity(),
        schwinger_core::pauli::objective_full_weight(&model.coefficients)
    );
    out.write_manifest("decompose", config, 0)?;
    Ok(())
}

pub fn cmd_optimize(
    config: &ExperimentConfig,
    mode: SearchMode,
    out: &mut OutputDir,
) -> anyhow::Result<()> {
    let pipeline = sector_pipeline(config)?;
    let vacuum = &pipeline.blocks[pipeline.vacuum_block].hamiltonian;
    let dim = pad_dimension(vacuum.nrows());
    let identity: Vec<usize> = (0..dim).collect();
    let identity_objective = embedding_objective(vacuum, &identity)?;

    let (embedding, histogram) = match mode {
        SearchMode::Brute => {
            let result = brute_force_search(vacuum)?;
            let mut csv = Csv::new("rank,objective");
            let mut rank = 1usize;
            for (objective, count) in result.sorted_objectives() {
                for _ in 0..count {
                    csv.row(&[rank.to_string(), objective.to_string()]);
                    rank += 1;
                }
            }
            out.write_text("objective_by_rank.csv", &csv.finish())?;
            (result.embedding, Some(result.histogram))
        }
        SearchMode::Greedy => (
            greedy_local_search(vacuum, config.embedding.restarts, config.embedding.seed)?,
            None,
        ),
    };

    let value = serde_json::json!({
        "num_sites": pipeline.spec.num_sites,
        "group_order": pipeline.spec.group_order,
        "sector_dimension": vacuum.nrows(),
        "embedded_dimension": dim,
        "num_qubits": embedding.num_qubits,
        "mode": match mode { SearchMode::Brute => "brute", SearchMode::Greedy => "greedy" },
        "restarts": config.embedding.restarts,
        "seed": config.embedding.seed,
        "permutation": embedding.one_indexed(),
        "objective": embedding.objective_value,
        "identity_objective": identity_objective,
        "histogram": histogram.map(|h| {
            h.into_iter()
                .map(|(k, v)| (k.to_string(), serde_json::json!(v)))
                .collect::<serde_json::Map<String, serde_json::Value>>()
        }),
    });
    out.write_json("optimize.json", &value)?;
    println!(
        "best objective {} (identity {}) over {} states",
        embedding.objective_value, identity_objective, dim
    );
    out.write_manifest("optimize", config, config.embedding.seed)?;
    Ok(())
}

pub fn cmd_trotter(
    config: &ExperimentConfig,
    steps: usize,
    out: &mut OutputDir,
) -> anyhow::Result<()> {
    let model = build_model(config)?;
    let single = trotter_step(&model.coefficients, config.trotter.dt)?;
    let circuit = model.evolution_circuit(steps as f64 * config.trotter.dt, config.trotter.dt, true)?;
    out.write_text("trotter_step.txt", &single.to_text())?;
    out.write_text("evolution.txt", &circuit.to_text())?;
    println!(
        "step: {} gates, depth {}; {} steps with preparation: {} gates, depth {}",
        single.gates.len(),
        single.depth(),
        steps,
        circuit.gates.len(),
        circuit.depth()
    );
    out.write_manifest("trotter", config, 0)?;
    Ok(())
}

pub fn cmd_density_evolve(
    config: &ExperimentConfig,
    method: Method,
    out: &mut OutputDir,
) -> anyhow::Result<()> {
    let model = build_model(config)?;
    let times = time_grid(config.run.t_max, config.trotter.dt);
    let backend = match method {
        Method::Exact => DensityMethod::Exact,
        other => DensityMethod::Circuit(circuit_run(config, other, false)),
    };
    let series = density_series(&model, &times, &backend)?;
    let mut csv = Csv::new("t,value,stderr,method");
    for point in &series {
        csv.row(&[
            fmt_time(point.t),
            fmt_f64(point.value),
            fmt_f64(point.stderr),
            method_name(method).to_string(),
        ]);
    }
    out.write_text(&format!("density_{}.csv", method_name(method)), &csv.finish())?;
    println!(
        "density series ({}): {} points, final value {:.6}",
        method_name(method),
        series.len(),
        series.last().map(|p| p.value).unwrap_or(0.0)
    );
    out.write_manifest("density-evolve", config, config.run.seed)?;
    Ok(())
}

pub fn cmd_green(
    config: &ExperimentConfig,
    method: Method,
    s_values: &[f64],
    phi: PhiConvention,
    out: &mut OutputDir,
) -> anyhow::Result<()> {
    let model = build_model(config)?;
    let conjugate = matches!(phi, PhiConvention::Conjugate);
    let mut csv = Csv::new("t,s,re,im,stderr_re,stderr_im,method");
    for (s_index, &s) in s_values.iter().enumerate() {
        let backend = match method {
            Method::Exact => GreenMethod::Exact,
            other => {
                let mut run = circuit_run(config, other, conjugate);
                run.seed = stream_seed(run.seed, s_index as u64);
                GreenMethod::Circuit(run)
            }
        };
        for t in offset_grid(s, config.run.t_max, config.trotter.dt, config.trotter.dt) {
            let point = lesser_green(&model, t, s, &backend)?;
            csv.row(&[
                fmt_time(point.t),
                fmt_time(point.s),
                fmt_f64(point.value.re),
                fmt_f64(point.value.im),
                fmt_f64(point.stderr_re),
                fmt_f64(point.stderr_im),
                method_name(method).to_string(),
            ]);
        }
        println!("green s={s} ({}) done", method_name(method));
    }
    out.write_text(&format!("green_{}.csv", method_name(method)), &csv.finish())?;
    out.write_manifest("green", config, config.run.seed)?;
    Ok(())
}

pub fn cmd_mitigate_demo(config: &ExperimentConfig, out: &mut OutputDir) -> anyhow::Result<()> {
    let model = build_model(config)?;
    let times = time_grid(config.run.t_max, config.trotter.dt);
    let exact = density_series(&model, &times, &DensityMethod::Exact)?;
    let noisy = density_series(
        &model,
        &times,
        &DensityMethod::Circuit(circuit_run(config, Method::Noisy, false)),
    )?;
    let trex = density_series(
        &model,
        &times,
        &DensityMethod::Circuit(circuit_run(config, Method::Trex, false)),
    )?;
    let zne = density_series(
        &model,
        &times,
        &DensityMethod::Circuit(circuit_run(config, Method::Zne, false)),
    )?;
    let mut csv = Csv::new("t,exact,noisy,trex,zne");
    for i in 0..times.len() {
        csv.row(&[
            fmt_time(times[i]),
            fmt_f64(exact[i].value),
            fmt_f64(noisy[i].value),
            fmt_f64(trex[i].value),
            fmt_f64(zne[i].value),
        ]);
    }
    out.write_text("mitigate_demo.csv", &csv.finish())?;
    println!("mitigation comparison over {} points written", times.len());
    out.write_manifest("mitigate-demo", config, config.run.seed)?;
    Ok(())
}

const REGIMES: [(f64, f64); 3] = [(0.6, 0.1), (1.5, 0.5), (4.0, 1.0)];

pub fn cmd_reproduce_paper(config: &ExperimentConfig, out: &mut OutputDir) -> anyhow::Result<()> {
    // Coefficient tables for the simple and optimal embeddings plus the
    // density operator, in all three coupling regimes.
    let spec = lattice_spec(config)?;
    if (spec.num_sites, spec.group_order) != (4, 3) {
        bail!("reproduce-paper runs the four-site Z_3 study; adjust [lattice]");
    }
    let mut trivial_csv = Csv::new("xi,mu,indices,pauli,coefficient,weight");
    let mut optimal_csv = Csv::new("xi,mu,indices,pauli,coefficient,weight");
    let mut density_csv = Csv::new("indices,pauli,coefficient,weight");
    for (regime_index, &(xi, mu)) in REGIMES.iter().enumerate() {
        let identity: Vec<usize> = (0..8).collect();
        let trivial = EmbeddedModel::build(spec, Couplings::new(xi, mu), &identity)?;
        let optimal = EmbeddedModel::four_site(Couplings::new(xi, mu))?;
        for (target, model) in
            [(&mut trivial_csv, &trivial), (&mut optimal_csv, &optimal)]
        {
            for (string, &value) in &model.coefficients.terms {
                target.row(&[
                    fmt_f64(xi),
                    fmt_f64(mu),
                    string.indices().iter().map(|i| i.to_string()).collect::<String>(),
                    string.to_string(),
                    fmt_f64(value),
                    string.weight().to_string(),
                ]);
            }
        }
        if regime_index == 0 {
            for (string, &value) in &optimal.density.decomposition.terms {
                density_csv.row(&[
                    string.indices().iter().map(|i| i.to_string()).collect::<String>(),
                    string.to_string(),
                    fmt_f64(value),
                    string.weight().to_string(),
                ]);
            }
        }
    }
    out.write_text("table_simple_embedding.csv", &trivial_csv.finish())?;
    out.write_text("table_optimal_embedding.csv", &optimal_csv.finish())?;
    out.write_text("table_density_operator.csv", &density_csv.finish())?;

    // Objective-by-rank curve from the exhaustive search.
    let pipeline = sector_pipeline(config)?;
    let vacuum = &pipeline.blocks[pipeline.vacuum_block].hamiltonian;
    let search = brute_force_search(vacuum)?;
    let mut rank_csv = Csv::new("rank,objective");
    let mut rank = 1usize;
    for (objective, count) in search.sorted_objectives() {
        for _ in 0..count {
            rank_csv.row(&[rank.to_string(), objective.to_string()]);
            rank += 1;
        }
    }
    out.write_text("objective_by_rank.csv", &rank_csv.finish())?;

    // Density evolution in the three regimes: exact, noiseless Trotter, and
    // the noisy/mitigated curves.
    let times = time_grid(config.run.t_max, config.trotter.dt);
    for &(xi, mu) in &REGIMES {
        let mut regime_config = config.clone();
        regime_config.couplings.xi = xi;
        regime_config.couplings.mu = mu;
        let model = EmbeddedModel::four_site(Couplings::new(xi, mu))?;
        let exact = density_series(&model, &times, &DensityMethod::Exact)?;
        let trotter = density_series(
            &model,
            &times,
            &DensityMethod::Circuit(CircuitRun::expectation(config.trotter.dt)),
        )?;
        let noisy = density_series(
            &model,
            &times,
            &DensityMethod::Circuit(circuit_run(&regime_config, Method::Noisy, false)),
        )?;
        let trex = density_series(
            &model,
            &times,
            &DensityMethod::Circuit(circuit_run(&regime_config, Method::Trex, false)),
        )?;
        let zne = density_series(
            &model,
            &times,
            &DensityMethod::Circuit(circuit_run(&regime_config, Method::Zne, false)),
        )?;
        let mut csv = Csv::new("t,exact,trotter,noisy,noisy_err,trex,trex_err,zne,zne_err");
        for i in 0..times.len() {
            csv.row(&[
                fmt_time(times[i]),
                fmt_f64(exact[i].value),
                fmt_f64(trotter[i].value),
                fmt_f64(noisy[i].value),
                fmt_f64(noisy[i].stderr),
                fmt_f64(trex[i].value),
                fmt_f64(trex[i].stderr),
                fmt_f64(zne[i].value),
                fmt_f64(zne[i].stderr),
            ]);
        }
        out.write_text(&format!("density_xi{xi}_mu{mu}.csv"), &csv.finish())?;
        println!("density curves for (xi, mu) = ({xi}, {mu}) done");
    }

    // Correlator curves: noiseless Trotter reference plus noisy, T-REx and
    // ZNE runs, on a coarser marker grid.
    let green_step = 0.2;
    for method in [Method::Noisy, Method::Trex, Method::Zne] {
        let mut csv = Csv::new("xi,mu,s,t,re_ref,im_ref,re,im,stderr_re,stderr_im");
        for (regime_index, &(xi, mu)) in REGIMES.iter().enumerate() {
            let mut regime_config = config.clone();
            regime_config.couplings.xi = xi;
            regime_config.couplings.mu = mu;
            let model = EmbeddedModel::four_site(Couplings::new(xi, mu))?;
            for (s_index, &s) in config.run.s_values.iter().enumerate() {
                let mut run = circuit_run(&regime_config, method, false);
                run.seed = stream_seed(
                    run.seed,
                    (regime_index * config.run.s_values.len() + s_index) as u64,
                );
                let backend = GreenMethod::Circuit(run);
                for t in offset_grid(s, config.run.t_max, green_step, config.trotter.dt) {
                    let reference = trotter_green_oracle(&model, t, s, config.trotter.dt)?;
                    let point = lesser_green(&model, t, s, &backend)?;
                    csv.row(&[
                        fmt_f64(xi),
                        fmt_f64(mu),
                        fmt_time(s),
                        fmt_time(t),
                        fmt_f64(reference.re),
                        fmt_f64(reference.im),
                        fmt_f64(point.value.re),
                        fmt_f64(point.value.im),
                        fmt_f64(point.stderr_re),
                        fmt_f64(point.stderr_im),
                    ]);
                }
                println!(
                    "green curves ({}) for (xi, mu) = ({xi}, {mu}), s = {s} done",
                    method_name(method)
                );
            }
        }
        out.write_text(&format!("green_{}.csv", method_name(method)), &csv.finish())?;
    }

    out.write_manifest("reproduce-paper", config, config.run.seed)?;
    Ok(())
}
