//! Line-oriented vocabulary file.
//!
//! ```text
//! scheme=bpe size=8192
//! 0\t<surface>
//! 1\t<surface>
//! ```
//!
//! Surfaces escape `\\`, `\t`, `\n` and `\r`; bytes that are not valid UTF-8
//! are written as `\xNN`.

use std::io::{self, BufRead, Write};

use super::{Scheme, TokenizerError, Vocabulary};

fn escape(bytes: &[u8], out: &mut String) {
    for chunk in bytes.utf8_chunks() {
        for c in chunk.valid().chars() {
            match c {
                '\\' => out.push_str("\\\\"),
                '\t' => out.push_str("\\t"),
                '\n' => out.push_str("\\n"),
                '\r' => out.push_str("\\r"),
                c => out.push(c),
            }
        }
        for b in chunk.invalid() {
            out.push_str(&format!("\\x{b:02x}"));
        }
    }
}

fn unescape(s: &str, line_no: usize) -> Result<Vec<u8>, TokenizerError> {
    let bad = |what: &str| TokenizerError::Format(format!("line {line_no}: {what}"));
    let mut out = Vec::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            let mut buf = [0u8; 4];
            out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
            continue;
        }
        match chars.next() {
            Some('\\') => out.push(b'\\'),
            Some('t') => out.push(b'\t'),
            Some('n') => out.push(b'\n'),
            Some('r') => out.push(b'\r'),
            Some('x') => {
                let hex: String = chars.by_ref().take(2).collect();
                let b = u8::from_str_radix(&hex, 16).map_err(|_| bad("bad \\x escape"))?;
                out.push(b);
            }
            _ => return Err(bad("dangling backslash escape")),
        }
    }
    Ok(out)
}

pub fn write_vocabulary<W: Write>(vocab: &Vocabulary, mut w: W) -> io::Result<()> {
    writeln!(w, "scheme={} size={}", vocab.scheme(), vocab.len())?;
    let mut line = String::new();
    for (id, surface) in vocab.surfaces().iter().enumerate() {
        line.clear();
        escape(surface, &mut line);
        writeln!(w, "{id}\t{line}")?;
    }
    w.flush()
}

pub fn read_vocabulary<R: BufRead>(r: R) -> Result<Vocabulary, TokenizerError> {
    let fmt = |msg: String| TokenizerError::Format(msg);
    let mut lines = r.split(b'\n');
    let header = lines
        .next()
        .ok_or_else(|| fmt("missing header".into()))?
        .map_err(|e| fmt(e.to_string()))?;
    let header = String::from_utf8(header).map_err(|_| fmt("header is not UTF-8".into()))?;

    let mut scheme = None;
    let mut size = None;
    for field in header.split_whitespace() {
        match field.split_once('=') {
            Some(("scheme", v)) => scheme = Some(v.parse::<Scheme>().map_err(fmt)?),
            Some(("size", v)) => {
                size = Some(v.parse::<usize>().map_err(|_| fmt(format!("bad size `{v}`")))?)
            }
            _ => return Err(fmt(format!("unexpected header field `{field}`"))),
        }
    }
    let scheme = scheme.ok_or_else(|| fmt("header lacks scheme=".into()))?;
    let size = size.ok_or_else(|| fmt("header lacks size=".into()))?;

    let mut surfaces = Vec::with_capacity(size);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| fmt(e.to_string()))?;
        let line = String::from_utf8(line).map_err(|_| fmt(format!("line {line_no} is not UTF-8")))?;
        if line.is_empty() && surfaces.len() == size {
            continue;
        }
        let (id, surface) = line
            .split_once('\t')
            .ok_or_else(|| fmt(format!("line {line_no}: expected `<id>\\t<surface>`")))?;
        let id: usize = id.parse().map_err(|_| fmt(format!("line {line_no}: bad id `{id}`")))?;
        if id != surfaces.len() {
            return Err(fmt(format!("line {line_no}: id {id} is not dense (expected {})", surfaces.len())));
        }
        surfaces.push(unescape(surface, line_no)?);
    }
    if surfaces.len() != size {
        return Err(fmt(format!("header says size={size} but file has {} entries", surfaces.len())));
    }
    Vocabulary::from_surfaces(scheme, surfaces)
}
