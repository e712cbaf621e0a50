//! Machine loading, input enumeration and the checks shared by the machine
//! commands.

use pencil_turing::{random_tm, run_pencil_tm, tm_run, PencilTmRun, SymbolId, TmRun, TmSpec};

use crate::{CliError, MachineArgs};

/// The machine named by `args`.
pub fn load(args: &MachineArgs) -> Result<TmSpec, CliError> {
    match (&args.tm, args.random_tm) {
        (Some(path), _) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            TmSpec::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
        }
        (None, Some(seed)) => Ok(random_tm(seed)),
        (None, None) => Err(CliError::Usage("a machine is required: pass --tm FILE or --random-tm SEED".into())),
    }
}

/// Parses a space-separated input.
pub fn parse_input(spec: &TmSpec, text: &str) -> Result<Vec<SymbolId>, CliError> {
    spec.parse_input(text).map_err(|e| CliError::Usage(format!("--input: {e}")))
}

/// Renders an input with the machine's symbol names.
pub fn show_input(spec: &TmSpec, input: &[SymbolId]) -> String {
    input.iter().map(|&a| spec.alphabet()[a].as_str()).collect::<Vec<_>>().join(" ")
}

/// The first `count` inputs over the non-blank symbols, shortest first and
/// in symbol order within a length, starting with the empty input.
pub fn shortlex_inputs(spec: &TmSpec, count: usize) -> Vec<Vec<SymbolId>> {
    let symbols: Vec<SymbolId> = (0..spec.alphabet().len()).filter(|&a| a != spec.blank()).collect();
    let mut out: Vec<Vec<SymbolId>> = Vec::with_capacity(count);
    let mut layer: Vec<Vec<SymbolId>> = vec![Vec::new()];
    while out.len() < count {
        out.extend(layer.iter().take(count - out.len()).cloned());
        layer = layer.iter().flat_map(|w| symbols.iter().map(move |&a| [&w[..], &[a]].concat())).collect();
    }
    out
}

/// Both runs of one machine on one input, and what disagreed.
pub struct Comparison {
    pub direct: TmRun,
    pub pencil: PencilTmRun,
    pub problems: Vec<String>,
}

/// Runs `spec` on `input` directly and with PENCIL and checks that the
/// verdicts and step counts agree and that the context and token bounds
/// hold for the peak state length S and step count T.
pub fn compare(spec: &TmSpec, input: &[SymbolId], cap: usize) -> Result<Comparison, CliError> {
    let usage = |e: pencil_turing::TuringError| CliError::Usage(e.to_string());
    let direct = tm_run(spec, input, cap).map_err(usage)?;
    let pencil = run_pencil_tm(spec, input, cap).map_err(usage)?;
    let mut problems = Vec::new();
    if pencil.verdict != direct.verdict {
        problems.push(format!("verdict {} but the machine says {}", pencil.verdict, direct.verdict));
    }
    if pencil.steps != direct.steps {
        problems.push(format!("{} steps but the machine took {}", pencil.steps, direct.steps));
    }
    let (s, t) = (direct.state_space, direct.steps);
    if pencil.max_context > 3 * s + 4 {
        problems.push(format!("max context {} exceeds 3S+4 = {}", pencil.max_context, 3 * s + 4));
    }
    if pencil.total_tokens > 4 * t + s + 4 {
        problems.push(format!("{} tokens exceed 4T+S+4 = {}", pencil.total_tokens, 4 * t + s + 4));
    }
    Ok(Comparison { direct, pencil, problems })
}
