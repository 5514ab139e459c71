//! Instance file format: structured text with an `[algebra]` section (ambient
//! dimension, basis matrices, derivation generator) and a `[module]` section
//! (free rank, generators). Complex matrices are written as whitespace
//! separated `re,im` pairs in row-major order after a `rows cols` header, with
//! shortest round-trip float formatting, so save/load is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use absorbtk_core::algebra::AlgebraContext;
use absorbtk_core::matrix::{C64, CMatrix};
use absorbtk_core::presentation::ModulePresentation;

use crate::CliError;

#[cfg_attr(not(test), allow(dead_code))]
pub fn save_instance(ctx: &AlgebraContext, pres: &ModulePresentation) -> String {
    let mut out = String::new();
    out.push_str("# absorbtk instance v1\n");
    out.push_str("[algebra]\n");
    let _ = writeln!(out, "name = {}", ctx.name());
    let _ = writeln!(out, "dim = {}", ctx.ambient_dim());
    let _ = writeln!(out, "basis_count = {}", ctx.basis().len());
    for (k, b) in ctx.basis().iter().enumerate() {
        let _ = writeln!(out, "basis {k}");
        write_matrix(&mut out, b);
    }
    out.push_str("d0\n");
    write_matrix(&mut out, ctx.derivation_generator());
    out.push_str("[module]\n");
    let _ = writeln!(out, "free_rank = {}", pres.free_rank());
    let _ = writeln!(out, "generators = {}", pres.generator_count());
    for (j, gen) in pres.generators().iter().enumerate() {
        for (k, slot) in gen.iter().enumerate() {
            let _ = writeln!(out, "generator {j} slot {k}");
            write_matrix(&mut out, slot);
        }
    }
    out
}

#[cfg_attr(not(test), allow(dead_code))]
fn write_matrix(out: &mut String, m: &CMatrix) {
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{},{}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            lines: text.lines().collect(),
            pos: 0,
        }
    }

    /// Next significant line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        while self.pos < self.lines.len() {
            let n = self.pos;
            self.pos += 1;
            let t = self.lines[n].trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Some((n + 1, t));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), CliError> {
        self.next()
            .ok_or_else(|| CliError::Parse(format!("unexpected end of file, expected {what}")))
    }
}

fn parse_matrix(lines: &mut Lines) -> Result<CMatrix, CliError> {
    let (lno, header) = lines.expect("matrix size header")?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| CliError::Parse(format!("line {lno}: bad matrix dimension `{t}`")))
        })
        .collect::<Result<_, _>>()?;
    if dims.len() != 2 || dims[0] == 0 || dims[1] == 0 {
        return Err(CliError::Parse(format!(
            "line {lno}: matrix header must be `rows cols`"
        )));
    }
    let (rows, cols) = (dims[0], dims[1]);
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        let (lno, row) = lines.expect("matrix row")?;
        let entries: Vec<&str> = row.split_whitespace().collect();
        if entries.len() != cols {
            return Err(CliError::Parse(format!(
                "line {lno}: expected {cols} entries, found {}",
                entries.len()
            )));
        }
        for (j, e) in entries.iter().enumerate() {
            let (re, im) = e.split_once(',').ok_or_else(|| {
                CliError::Parse(format!(
                    "line {lno}, column {}: entry `{e}` is not `re,im`",
                    j + 1
                ))
            })?;
            let re: f64 = re.parse().map_err(|_| {
                CliError::Parse(format!("line {lno}, column {}: bad real part `{re}`", j + 1))
            })?;
            let im: f64 = im.parse().map_err(|_| {
                CliError::Parse(format!(
                    "line {lno}, column {}: bad imaginary part `{im}`",
                    j + 1
                ))
            })?;
            m[(i, j)] = C64::new(re, im);
        }
    }
    Ok(m)
}

fn key_value<'a>(line: &'a str, lno: usize, key: &str) -> Result<&'a str, CliError> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| CliError::Parse(format!("line {lno}: expected `{key} = ...`")))?;
    if k.trim() != key {
        return Err(CliError::Parse(format!(
            "line {lno}: expected key `{key}`, found `{}`",
            k.trim()
        )));
    }
    Ok(v.trim())
}

/// Parse and validate an instance file; all context and presentation
/// invariants are checked on load.
pub fn parse_instance(text: &str) -> Result<(AlgebraContext, ModulePresentation), CliError> {
    let mut lines = Lines::new(text);
    let (lno, l) = lines.expect("[algebra] section")?;
    if l != "[algebra]" {
        return Err(CliError::Parse(format!("line {lno}: expected `[algebra]`")));
    }
    let (lno, l) = lines.expect("name")?;
    let name = key_value(l, lno, "name")?.to_string();
    let (lno, l) = lines.expect("dim")?;
    let dim: usize = key_value(l, lno, "dim")?
        .parse()
        .map_err(|_| CliError::Parse(format!("line {lno}: bad dim")))?;
    let (lno, l) = lines.expect("basis_count")?;
    let basis_count: usize = key_value(l, lno, "basis_count")?
        .parse()
        .map_err(|_| CliError::Parse(format!("line {lno}: bad basis_count")))?;
    if basis_count == 0 {
        return Err(CliError::Parse(format!("line {lno}: basis_count must be positive")));
    }
    let mut basis = Vec::with_capacity(basis_count);
    for k in 0..basis_count {
        let (lno, l) = lines.expect("basis header")?;
        if l != format!("basis {k}") {
            return Err(CliError::Parse(format!("line {lno}: expected `basis {k}`")));
        }
        basis.push(parse_matrix(&mut lines)?);
    }
    let (lno, l) = lines.expect("d0 header")?;
    if l != "d0" {
        return Err(CliError::Parse(format!("line {lno}: expected `d0`")));
    }
    let d0 = parse_matrix(&mut lines)?;
    if d0.nrows() != dim {
        return Err(CliError::Parse(format!(
            "d0 is {}x{}, declared dim is {dim}",
            d0.nrows(),
            d0.ncols()
        )));
    }

    let (lno, l) = lines.expect("[module] section")?;
    if l != "[module]" {
        return Err(CliError::Parse(format!("line {lno}: expected `[module]`")));
    }
    let (lno, l) = lines.expect("free_rank")?;
    let free_rank: usize = key_value(l, lno, "free_rank")?
        .parse()
        .map_err(|_| CliError::Parse(format!("line {lno}: bad free_rank")))?;
    let (lno, l) = lines.expect("generators")?;
    let generators_count: usize = key_value(l, lno, "generators")?
        .parse()
        .map_err(|_| CliError::Parse(format!("line {lno}: bad generator count")))?;
    let mut generators = Vec::with_capacity(generators_count);
    for j in 0..generators_count {
        let mut slots = Vec::with_capacity(free_rank);
        for k in 0..free_rank {
            let (lno, l) = lines.expect("generator header")?;
            if l != format!("generator {j} slot {k}") {
                return Err(CliError::Parse(format!(
                    "line {lno}: expected `generator {j} slot {k}`"
                )));
            }
            slots.push(parse_matrix(&mut lines)?);
        }
        generators.push(slots);
    }
    if let Some((lno, l)) = lines.next() {
        return Err(CliError::Parse(format!("line {lno}: trailing content `{l}`")));
    }

    // invariants: named validation errors come from the core constructors
    let ctx = AlgebraContext::new(&name, basis, d0)
        .map_err(|e| CliError::Invariant(format!("D0/basis invariant violation: {e}")))?;
    let pres = ModulePresentation::new(ctx.clone(), free_rank, generators)
        .map_err(|e| CliError::Invariant(format!("presentation invariant violation: {e}")))?;
    pres.gram()
        .map_err(|e| CliError::Invariant(format!("gram invariant violation: {e}")))?;
    Ok((ctx, pres))
}

pub fn load_instance(path: &Path) -> Result<(AlgebraContext, ModulePresentation), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use absorbtk_core::algebra::{builtin_instance, InstanceSpec};

    #[test]
    fn roundtrip_is_bitwise_exact() {
        for spec in absorbtk_core::algebra::builtin_suite() {
            let (ctx, pres) = builtin_instance(&spec).unwrap();
            let text = save_instance(&ctx, &pres);
            let (ctx2, pres2) = parse_instance(&text).unwrap();
            assert_eq!(ctx.name(), ctx2.name());
            for (a, b) in ctx.basis().iter().zip(ctx2.basis()) {
                assert_eq!(a, b, "basis must round-trip bit-exactly");
            }
            assert_eq!(ctx.derivation_generator(), ctx2.derivation_generator());
            for (ga, gb) in pres.generators().iter().zip(pres2.generators()) {
                for (a, b) in ga.iter().zip(gb) {
                    assert_eq!(a, b, "generators must round-trip bit-exactly");
                }
            }
        }
    }

    #[test]
    fn non_hermitian_d0_is_rejected_with_named_invariant() {
        let (ctx, pres) = builtin_instance(&InstanceSpec::Pauli).unwrap();
        let mut text = save_instance(&ctx, &pres);
        // corrupt d0 into a non-Hermitian matrix
        text = text.replace("d0\n2 2\n1,0 0,0\n0,0 -1,0", "d0\n2 2\n1,0 1,0\n0,0 -1,0");
        let err = parse_instance(&text).unwrap_err();
        assert!(err.to_string().contains("not Hermitian"), "{err}");
    }

    #[test]
    fn gram_membership_failure_names_the_block() {
        // diagonal algebra with a generator whose self-pairing leaves it
        let text = "\
[algebra]
name = diag
dim = 2
basis_count = 2
basis 0
2 2
1,0 0,0
0,0 0,0
basis 1
2 2
0,0 0,0
0,0 1,0
d0
2 2
0,0 0,0
0,0 0,0
[module]
free_rank = 1
generators = 1
generator 0 slot 0
2 2
1,0 1,0
0,0 0,0
";
        let err = parse_instance(text).unwrap_err();
        assert!(err.to_string().contains("(0, 0)"), "{err}");
    }

    #[test]
    fn parse_error_reports_line_and_column() {
        let text = "[algebra]\nname = x\ndim = 1\nbasis_count = 1\nbasis 0\n1 1\n1,0,oops\n";
        let err = parse_instance(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 7"), "{msg}");
    }
}
