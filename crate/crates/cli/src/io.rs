use std::fs;
use std::path::Path;

use anyhow::{bail, Context as _};
use quadkit::corpus::{
    import_legacy_line, parse_sentence_record, read_quad_sets, ImportOptions, LineReject, Role,
};
use quadkit::{AnnotatedSentence, Quad, Taxonomy};
use rayon::prelude::*;

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn load_taxonomy(path: Option<&Path>) -> anyhow::Result<Taxonomy> {
    match path {
        None => Ok(Taxonomy::restaurant()),
        Some(p) => Taxonomy::from_lines(&read_text(p)?)
            .with_context(|| format!("invalid taxonomy {}", p.display())),
    }
}

pub struct Loaded {
    pub sentences: Vec<AnnotatedSentence>,
    pub rejects: Vec<LineReject>,
}

/// Reads a gold corpus in legacy or canonical record form, one sentence per
/// non-blank line. Bad lines are collected, not fatal.
pub fn load_corpus(
    path: &Path,
    opts: &ImportOptions,
    taxonomy: &Taxonomy,
) -> anyhow::Result<Loaded> {
    let text = read_text(path)?;
    let parsed: Vec<(usize, Result<AnnotatedSentence, String>)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, line)| {
            let r = if line.trim_start().starts_with('{') {
                parse_sentence_record(line, taxonomy)
            } else {
                import_legacy_line(line, opts, taxonomy)
            };
            (i + 1, r.map_err(|e| e.to_string()))
        })
        .collect();
    let mut out = Loaded {
        sentences: Vec::with_capacity(parsed.len()),
        rejects: Vec::new(),
    };
    for (line, r) in parsed {
        match r {
            Ok(s) => out.sentences.push(s),
            Err(reason) => out.rejects.push(LineReject { line, reason }),
        }
    }
    Ok(out)
}

pub fn report_rejects(path: &Path, rejects: &[LineReject]) {
    for r in rejects {
        eprintln!("warning: {}:{}: {}", path.display(), r.line, r.reason);
    }
}

/// One quad set per line, in any format `read_quad_sets` understands.
pub fn load_quad_sets(
    path: &Path,
    role: Role,
    opts: &ImportOptions,
    taxonomy: &Taxonomy,
) -> anyhow::Result<Vec<Vec<Quad>>> {
    let text = read_text(path)?;
    let sets = match read_quad_sets(&text, role, opts, taxonomy) {
        Ok(s) => s,
        Err((line, e)) => bail!("{}:{line}: {e}", path.display()),
    };
    for (line, diag) in &sets.warnings {
        for (seg, reason) in diag.rejections() {
            eprintln!(
                "warning: {}:{line}: dropped segment {:?}: {}",
                path.display(),
                seg.raw,
                reason.as_str()
            );
        }
    }
    Ok(sets.sets)
}
