//! SDPA sparse text format (.dat-s).
//!
//! Layout: a counts line (m), a block-count line, a block-dimensions line,
//! the right-hand-side vector, then one entry per line `matno blkno i j value`
//! with 1-based indices, upper triangle only. `matno` 0 is the objective and
//! is omitted entirely for feasibility problems.

use crate::linalg::Mat;
use crate::Scalar;

use super::{BlockMat, SdpError, SdpProblem};

pub(super) fn export<T: Scalar>(problem: &SdpProblem<T>) -> String {
    let mut out = String::new();
    out.push_str(&format!("{}\n", problem.num_constraints()));
    out.push_str(&format!("{}\n", problem.num_blocks()));
    let dims: Vec<String> = problem.block_dims().iter().map(|d| d.to_string()).collect();
    out.push_str(&dims.join(" "));
    out.push('\n');
    let rhs: Vec<String> =
        problem.constraints().iter().map(|c| format_value(c.rhs)).collect();
    out.push_str(&rhs.join(" "));
    out.push('\n');

    let push_entries = |matno: usize, mat: &BlockMat<T>, out: &mut String| {
        for (blk, m) in mat.terms() {
            for i in 0..m.nrows() {
                for j in i..m.ncols() {
                    let v = m[(i, j)];
                    if v != T::zero() {
                        out.push_str(&format!(
                            "{} {} {} {} {}\n",
                            matno,
                            blk + 1,
                            i + 1,
                            j + 1,
                            format_value(v)
                        ));
                    }
                }
            }
        }
    };

    if !problem.objective().is_empty() {
        push_entries(0, problem.objective(), &mut out);
    }
    for (idx, c) in problem.constraints().iter().enumerate() {
        push_entries(idx + 1, &c.mat, &mut out);
    }
    out
}

fn format_value<T: Scalar>(v: T) -> String {
    format!("{v}")
}

/// Parses the subset of the SDPA sparse format produced by [`export`]:
/// positive block dimensions, `*`/`"`-prefixed comment lines skipped.
pub fn import_sdpa<T: Scalar>(text: &str) -> Result<SdpProblem<T>, SdpError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('*') && !l.starts_with('"'));

    let mut next_line = |what: &str| {
        lines.next().ok_or_else(|| SdpError::SdpaParse {
            line: 0,
            msg: format!("missing {what}"),
        })
    };

    let (ln, l) = next_line("constraint count")?;
    let m: usize = parse_tok(l, ln, "constraint count")?;
    let (ln, l) = next_line("block count")?;
    let nblocks: usize = parse_tok(l, ln, "block count")?;

    let (ln, l) = next_line("block dimensions")?;
    let mut dims = Vec::with_capacity(nblocks);
    for tok in split_tokens(l) {
        let d: i64 = tok.parse().map_err(|_| SdpError::SdpaParse {
            line: ln,
            msg: format!("bad block dimension {tok:?}"),
        })?;
        if d <= 0 {
            return Err(SdpError::SdpaParse {
                line: ln,
                msg: format!("unsupported block dimension {d} (diagonal blocks not handled)"),
            });
        }
        dims.push(d as usize);
    }
    if dims.len() != nblocks {
        return Err(SdpError::SdpaParse {
            line: ln,
            msg: format!("expected {nblocks} block dimensions, found {}", dims.len()),
        });
    }

    let mut rhs: Vec<T> = Vec::with_capacity(m);
    while rhs.len() < m {
        let (ln, l) = next_line("right-hand side")?;
        for tok in split_tokens(l) {
            let v: f64 = tok.parse().map_err(|_| SdpError::SdpaParse {
                line: ln,
                msg: format!("bad rhs value {tok:?}"),
            })?;
            rhs.push(T::c(v));
        }
    }
    if rhs.len() != m {
        return Err(SdpError::SdpaParse {
            line: 0,
            msg: format!("expected {m} rhs values, found {}", rhs.len()),
        });
    }

    // Accumulate dense blocks per matrix index, then assemble.
    let mut mats: Vec<Vec<Option<Mat<T>>>> = (0..=m)
        .map(|_| dims.iter().map(|_| None).collect())
        .collect();
    for (ln, l) in lines {
        let toks: Vec<&str> = split_tokens(l).collect();
        if toks.len() != 5 {
            return Err(SdpError::SdpaParse {
                line: ln,
                msg: format!("expected 5 fields, found {}", toks.len()),
            });
        }
        let matno: usize = parse_tok(toks[0], ln, "matno")?;
        let blkno: usize = parse_tok(toks[1], ln, "blkno")?;
        let i: usize = parse_tok(toks[2], ln, "row")?;
        let j: usize = parse_tok(toks[3], ln, "col")?;
        let v: f64 = toks[4].parse().map_err(|_| SdpError::SdpaParse {
            line: ln,
            msg: format!("bad value {:?}", toks[4]),
        })?;
        if matno > m {
            return Err(SdpError::SdpaParse {
                line: ln,
                msg: format!("matrix index {matno} exceeds constraint count {m}"),
            });
        }
        if blkno == 0 || blkno > dims.len() {
            return Err(SdpError::SdpaParse { line: ln, msg: format!("bad block index {blkno}") });
        }
        let dim = dims[blkno - 1];
        if i == 0 || j == 0 || i > dim || j > dim || i > j {
            return Err(SdpError::SdpaParse {
                line: ln,
                msg: format!("bad entry position ({i},{j}) for block of dimension {dim}"),
            });
        }
        let slot = &mut mats[matno][blkno - 1];
        let mat = slot.get_or_insert_with(|| Mat::zeros(dim, dim));
        mat[(i - 1, j - 1)] = T::c(v);
        mat[(j - 1, i - 1)] = T::c(v);
    }

    let mut problem = SdpProblem::new(dims)?;
    let objective_entries: Vec<(usize, Mat<T>)> = mats[0]
        .iter()
        .enumerate()
        .filter_map(|(b, m)| m.clone().map(|m| (b, m)))
        .collect();
    if !objective_entries.is_empty() {
        problem.set_objective(objective_entries)?;
    }
    for (k, rhs_k) in rhs.iter().enumerate() {
        let entries: Vec<(usize, Mat<T>)> = mats[k + 1]
            .iter()
            .enumerate()
            .filter_map(|(b, m)| m.clone().map(|m| (b, m)))
            .collect();
        problem.add_constraint(entries, *rhs_k)?;
    }
    Ok(problem)
}

fn split_tokens(l: &str) -> impl Iterator<Item = &str> {
    l.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty())
}

fn parse_tok<V: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<V, SdpError> {
    tok.parse().map_err(|_| SdpError::SdpaParse {
        line,
        msg: format!("bad {what}: {tok:?}"),
    })
}
