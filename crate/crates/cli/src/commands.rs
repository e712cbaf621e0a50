//! One function per subcommand.

use std::io::Write;

use pencil_core::{render, replay, Limits, PencilRun, Rule};
use pencil_datasets::{
    corpus_stats, corpus_vocab, cot_flops, flops, generate_corpus, split_scaffolded, training_examples, write_jsonl,
    write_stats_csv, write_vocab, CorpusConfig, DatasetError, Format, Instance, TaskSpec,
};
use pencil_fasp::{build_tm_program, check_against_reference};
use pencil_tasks::{
    brute_force_puzzle, brute_force_qbf, brute_force_sat, gen_puzzle, gen_qbf, gen_sat, Category, TaskError,
};
use pencil_turing::{random_input, random_tm, run_pencil_tm};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde_json::{json, Value};

use crate::machines::{compare, load, parse_input, shortlex_inputs, show_input};
use crate::{
    check_cap, CliError, CorpusArgs, ExportArgs, FaspCheckArgs, FormatArg, PencilArgs, RuleArg, RunArgs, StatsArgs,
    TaskKind, TmSimArgs, VerifyArgs,
};

fn emit(out: &mut dyn Write, v: Value) -> Result<(), CliError> {
    writeln!(out, "{v}").map_err(|e| CliError::Runtime(format!("writing output: {e}")))
}

fn dataset_error(e: DatasetError) -> CliError {
    match e {
        DatasetError::Task { .. } => CliError::Usage(e.to_string()),
        DatasetError::Replay { .. } => CliError::Failed(e.to_string()),
        _ => CliError::Runtime(e.to_string()),
    }
}

fn corpus(a: &CorpusArgs, jobs: usize) -> Result<Vec<Instance>, CliError> {
    let config = CorpusConfig { task: a.task.spec()?, count: a.count, seed: a.seed, balance: a.balance };
    generate_corpus(&config, jobs).map_err(dataset_error)
}

fn instance_seed(run: &RunArgs) -> Result<u64, CliError> {
    run.seed.ok_or_else(|| CliError::Usage("--seed is required for task instances".into()))
}

fn bool_label(b: bool) -> String {
    if b { "True" } else { "False" }.to_string()
}

/// The answer of the instance drawn from `seed`, by exhaustive search.
fn brute_force_label(spec: TaskSpec, seed: u64) -> Result<String, CliError> {
    let task = |e: TaskError| CliError::Usage(format!("instance seed {seed}: {e}"));
    match spec {
        TaskSpec::Sat { n } => Ok(bool_label(brute_force_sat(&gen_sat(n, seed).map_err(task)?).map_err(task)?)),
        TaskSpec::Qbf { n } => Ok(bool_label(brute_force_qbf(&gen_qbf(n, seed).map_err(task)?).map_err(task)?)),
        TaskSpec::Puzzle { houses, categories } => {
            let p = gen_puzzle(houses, categories, seed).map_err(task)?;
            let solutions = brute_force_puzzle(&p).map_err(task)?;
            let [only] = &solutions[..] else {
                return Err(CliError::Failed(format!("instance seed {seed}: {} solutions", solutions.len())));
            };
            let column = |c: Category| p.categories.iter().position(|&x| x == c).expect("categories in play");
            let (pet, nationality) = (column(Category::Pet), column(Category::Nationality));
            let house = only.iter().position(|row| row[pet] == "Fish").expect("someone keeps the fish");
            Ok(only[house][nationality].to_string())
        }
    }
}

/// Problems of one task instance against its oracles.
fn check_instance(spec: TaskSpec, seed: u64) -> Result<Vec<String>, CliError> {
    let inst = spec.instance(seed).map_err(dataset_error)?;
    let truth = brute_force_label(spec, seed)?;
    let mut problems = Vec::new();
    if inst.label != truth {
        problems.push(format!("trace answers {} but exhaustive search gives {truth}", inst.label));
    }
    let final_answer = render(&inst.run.final_answer);
    let stated = match spec {
        TaskSpec::Puzzle { .. } => final_answer.ends_with(&format!("the {} owns the Fish", inst.label)),
        _ => final_answer == format!("Answer: {}", inst.label),
    };
    if !stated {
        problems.push(format!("reduced run ends with {final_answer:?}"));
    }
    let mut rebuilt = inst.prompt.clone();
    for ex in split_scaffolded(&inst.run, &inst.prompt) {
        rebuilt.extend_from_slice(ex.target());
    }
    if rebuilt != inst.scaffold {
        problems.push("training examples do not reassemble the scaffold".into());
    }
    if inst.run.max_context > inst.scaffold.len() {
        problems.push("reduction lengthened the context".into());
    }
    Ok(problems)
}

pub fn gen(a: &CorpusArgs, jobs: usize, out: &mut dyn Write) -> Result<(), CliError> {
    for inst in corpus(a, jobs)? {
        emit(
            out,
            json!({
                "id": inst.id,
                "seed": inst.seed,
                "label": inst.label,
                "prompt": render(&inst.prompt),
                "prompt_len": inst.prompt.len(),
                "scaffold_len": inst.scaffold.len(),
            }),
        )?;
    }
    Ok(())
}

pub fn trace(a: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.task.task == TaskKind::Tm {
        check_cap(a.cap)?;
        let spec = load(&a.machine)?;
        let input = parse_input(&spec, &a.input)?;
        let c = compare(&spec, &input, a.cap)?;
        emit(
            out,
            json!({
                "task": "tm",
                "input": show_input(&spec, &input),
                "scaffold": render(&c.pencil.scaffold),
                "verdict": c.pencil.verdict.to_string(),
                "direct_verdict": c.direct.verdict.to_string(),
                "agree": c.pencil.verdict == c.direct.verdict,
            }),
        )?;
        return if c.pencil.verdict == c.direct.verdict {
            Ok(())
        } else {
            Err(CliError::Failed(format!("PENCIL says {}, the machine says {}", c.pencil.verdict, c.direct.verdict)))
        };
    }
    let spec = a.task.spec()?;
    let seed = instance_seed(a)?;
    let inst = spec.instance(seed).map_err(dataset_error)?;
    let truth = brute_force_label(spec, seed)?;
    emit(
        out,
        json!({
            "task": spec.name(),
            "seed": seed,
            "prompt": render(&inst.prompt),
            "scaffold": render(&inst.scaffold),
            "answer": inst.label,
            "brute_force": truth,
            "agree": inst.label == truth,
        }),
    )?;
    if inst.label != truth {
        return Err(CliError::Failed(format!("seed {seed}: trace answers {}, search gives {truth}", inst.label)));
    }
    Ok(())
}

/// Live contexts after every reduction, prompt included.
fn snapshots(run: &PencilRun) -> Vec<String> {
    run.iterations.iter().filter_map(|it| it.reduction.as_ref()).map(|r| render(&r.context)).collect()
}

pub fn pencil(a: &PencilArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let r = &a.run;
    if r.task.task == TaskKind::Tm {
        if a.rule == Some(RuleArg::Full) {
            return Err(CliError::Usage("machine runs use the simplified rule".into()));
        }
        if a.snapshots {
            return Err(CliError::Usage("--snapshots applies to task instances".into()));
        }
        check_cap(r.cap)?;
        let spec = load(&r.machine)?;
        let input = parse_input(&spec, &r.input)?;
        let run = run_pencil_tm(&spec, &input, r.cap).map_err(|e| CliError::Usage(e.to_string()))?;
        let triggers: Vec<Value> =
            run.triggers.iter().map(|t| json!({"context_len": t.context_len, "state_len": t.state_len})).collect();
        return emit(
            out,
            json!({
                "task": "tm",
                "rule": "simplified",
                "input": show_input(&spec, &input),
                "verdict": run.verdict.to_string(),
                "steps": run.steps,
                "total_tokens": run.total_tokens,
                "max_context": run.max_context,
                "reductions": run.reductions,
                "prompt_len": run.prompt_len,
                "final_context": render(&run.final_context),
                "triggers": triggers,
            }),
        );
    }
    let spec = r.task.spec()?;
    let seed = instance_seed(r)?;
    let inst = spec.instance(seed).map_err(dataset_error)?;
    let run = match a.rule.unwrap_or(RuleArg::Full) {
        RuleArg::Full => inst.run.clone(),
        RuleArg::Simplified => replay(&inst.scaffold, inst.prompt.len(), Rule::Simplified, Limits::unbounded())
            .map_err(|e| CliError::Failed(format!("seed {seed}: {e}")))?,
    };
    let f = flops(&run);
    let mut v = json!({
        "task": spec.name(),
        "seed": seed,
        "rule": if run.rule == Rule::Full { "full" } else { "simplified" },
        "prompt_len": run.prompt_len,
        "scaffold_len": inst.scaffold.len(),
        "total_generated": run.total_generated,
        "reductions": run.reductions,
        "max_context": run.max_context,
        "final_answer": render(&run.final_answer),
        "generation_term": f.generation_term,
        "reduction_term": f.reduction_term,
        "flops": f.total,
        "cot_flops": cot_flops(inst.prompt.len(), inst.scaffold.len()).total,
    });
    if a.snapshots {
        v["contexts"] = json!(snapshots(&run));
    }
    emit(out, v)
}

pub fn tm_sim(a: &TmSimArgs, out: &mut dyn Write) -> Result<(), CliError> {
    check_cap(a.cap)?;
    let spec = load(&a.machine)?;
    let input = parse_input(&spec, &a.input)?;
    let c = compare(&spec, &input, a.cap)?;
    emit(
        out,
        json!({
            "input": show_input(&spec, &input),
            "verdict": c.direct.verdict.to_string(),
            "steps": c.direct.steps,
            "extent": c.direct.extent,
            "state_space": c.direct.state_space,
            "pencil": {
                "verdict": c.pencil.verdict.to_string(),
                "steps": c.pencil.steps,
                "total_tokens": c.pencil.total_tokens,
                "max_context": c.pencil.max_context,
                "reductions": c.pencil.reductions,
            },
            "ok": c.problems.is_empty(),
        }),
    )?;
    if c.problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(c.problems.join("; ")))
    }
}

pub fn fasp_check(a: &FaspCheckArgs, pool: &ThreadPool, out: &mut dyn Write) -> Result<(), CliError> {
    check_cap(a.cap)?;
    let spec = load(&a.machine)?;
    let tm = build_tm_program(&spec);
    if a.dump {
        eprint!("{}", tm.program().dump());
    }
    let inputs: Vec<Vec<usize>> = match a.seed {
        None => shortlex_inputs(&spec, a.inputs),
        Some(seed) => pencil_datasets::candidate_seeds(seed, a.inputs)
            .into_iter()
            .map(|s| random_input(&spec, a.max_len, s))
            .collect(),
    };
    let results: Vec<_> =
        pool.install(|| inputs.par_iter().map(|input| check_against_reference(&tm, input, a.cap)).collect());
    let (mut steps, mut failures) = (0, 0);
    for (i, (input, result)) in inputs.iter().zip(results).enumerate() {
        let shown = show_input(&spec, input);
        match result {
            Ok(r) => {
                steps += r.checked;
                emit(
                    out,
                    json!({
                        "index": i,
                        "input": shown,
                        "verdict": r.run.verdict.to_string(),
                        "checked": r.checked,
                        "empty_context": r.empty_context,
                        "reductions": r.run.reductions,
                        "ok": true,
                    }),
                )?;
            }
            Err(e) => {
                failures += 1;
                eprintln!("input {i} ({shown:?}): {e}");
                emit(out, json!({"index": i, "input": shown, "ok": false, "error": e.to_string()}))?;
            }
        }
    }
    emit(out, json!({"inputs": inputs.len(), "checked_steps": steps, "failures": failures}))?;
    if failures > 0 {
        return Err(CliError::Failed(format!("{failures} of {} inputs disagree with the reference", inputs.len())));
    }
    Ok(())
}

pub fn stats(a: &StatsArgs, jobs: usize, out: &mut dyn Write) -> Result<(), CliError> {
    let insts = corpus(&a.corpus, jobs)?;
    if let Some(path) = &a.csv {
        write_stats_csv(&insts, path).map_err(dataset_error)?;
    }
    let s = corpus_stats(&insts);
    let mut v = serde_json::to_value(&s).expect("stats serialize");
    v["task"] = json!(a.corpus.task.spec()?.name());
    v["space_ratio"] = json!(s.space_ratio());
    emit(out, v)
}

pub fn export(a: &ExportArgs, jobs: usize, out: &mut dyn Write) -> Result<(), CliError> {
    let insts = corpus(&a.corpus, jobs)?;
    let io = |e: std::io::Error| CliError::Runtime(format!("{}: {e}", a.out.display()));
    std::fs::create_dir_all(&a.out).map_err(io)?;
    let vocab = corpus_vocab(&insts).map_err(dataset_error)?;
    write_vocab(&vocab, &a.out.join("vocab.txt")).map_err(dataset_error)?;
    write_stats_csv(&insts, &a.out.join("stats.csv")).map_err(dataset_error)?;
    let mut files = vec![json!({"file": "vocab.txt", "lines": vocab.len()})];
    let formats = match a.format {
        FormatArg::Pencil => vec![Format::Pencil],
        FormatArg::Cot => vec![Format::Cot],
        FormatArg::Both => vec![Format::Pencil, Format::Cot],
    };
    for format in formats {
        let name = if format == Format::Pencil { "pencil.jsonl" } else { "cot.jsonl" };
        let examples = training_examples(&insts, &vocab, format).map_err(dataset_error)?;
        write_jsonl(&examples, &a.out.join(name)).map_err(dataset_error)?;
        files.push(json!({"file": name, "lines": examples.len()}));
    }
    files.push(json!({"file": "stats.csv", "lines": insts.len()}));
    emit(out, json!({"out": a.out.display().to_string(), "instances": insts.len(), "files": files}))
}

pub fn verify(a: &VerifyArgs, pool: &ThreadPool, out: &mut dyn Write) -> Result<(), CliError> {
    let seeds = pencil_datasets::candidate_seeds(a.seed, a.count);
    let problems: Vec<(u64, Vec<String>)> = if a.task.task == TaskKind::Tm {
        check_cap(a.cap)?;
        pool.install(|| {
            seeds
                .par_iter()
                .map(|&s| {
                    let spec = random_tm(s);
                    let mut found = Vec::new();
                    for input in
                        pencil_datasets::candidate_seeds(s, a.inputs).into_iter().map(|k| random_input(&spec, 6, k))
                    {
                        let c = compare(&spec, &input, a.cap)?;
                        found.extend(
                            c.problems.into_iter().map(|p| format!("input {:?}: {p}", show_input(&spec, &input))),
                        );
                    }
                    Ok((s, found))
                })
                .collect::<Result<_, CliError>>()
        })?
    } else {
        let spec = a.task.spec()?;
        pool.install(|| seeds.par_iter().map(|&s| Ok((s, check_instance(spec, s)?))).collect::<Result<_, CliError>>())?
    };
    let failed: Vec<&(u64, Vec<String>)> = problems.iter().filter(|(_, p)| !p.is_empty()).collect();
    for (seed, p) in &failed {
        for line in p {
            eprintln!("seed {seed}: {line}");
        }
    }
    let name = match a.task.task {
        TaskKind::Tm => "tm",
        _ => a.task.spec()?.name(),
    };
    emit(
        out,
        json!({"task": name, "count": a.count, "seed": a.seed, "passed": a.count - failed.len(), "failed": failed.len()}),
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{} of {} disagree with their oracles", failed.len(), a.count)))
    }
}
