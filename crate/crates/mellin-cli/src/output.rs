use std::path::Path;

use serde::Serialize;

use crate::{Context, Failure};

pub fn json<T: Serialize>(ctx: &Context, name: &str, value: &T) -> Result<(), Failure> {
    if let Some(dir) = &ctx.out {
        let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.into()))?;
        std::fs::write(dir.join(name), text + "\n")?;
    }
    Ok(())
}

/// Prints `text` and mirrors it to `name` in the output directory.
pub fn text(ctx: &Context, name: &str, text: &str) -> Result<(), Failure> {
    print!("{text}");
    if let Some(dir) = &ctx.out {
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}

pub fn csv<R: Serialize>(
    ctx: &Context,
    name: &str,
    header: &[String],
    rows: impl IntoIterator<Item = R>,
) -> Result<(), Failure> {
    let Some(dir) = &ctx.out else { return Ok(()) };
    write_csv(&dir.join(name), header, rows).map_err(|e| Failure::Input(e.into()))
}

fn write_csv<R: Serialize>(
    path: &Path,
    header: &[String],
    rows: impl IntoIterator<Item = R>,
) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Left-aligned columns separated by two spaces.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let s: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        s.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}
