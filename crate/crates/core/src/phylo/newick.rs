//! Newick serialization with deterministic child ordering, plus a small
//! parser for round-trip checks.

use crate::error::{Error, Result};
use crate::phylo::{Node, PhyloTree};
use crate::util::fmt_sig;

/// Serialize with children ordered by their smallest leaf label, so the
/// string is independent of construction order. Labels containing Newick
/// metacharacters or spaces are single-quoted.
pub fn to_newick(tree: &PhyloTree) -> String {
    let mut s = String::new();
    write_node(tree, tree.root, &mut s);
    s.push(';');
    s
}

fn write_node(tree: &PhyloTree, node: usize, out: &mut String) {
    let n = &tree.nodes[node];
    if n.children.is_empty() {
        out.push_str(&quote(n.label.as_deref().unwrap_or("")));
    } else {
        let mut kids: Vec<usize> = n.children.clone();
        kids.sort_by_key(|&c| tree.clade(c).into_iter().next().unwrap_or_default());
        out.push('(');
        for (k, &c) in kids.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write_node(tree, c, out);
            out.push(':');
            out.push_str(&fmt_sig(tree.nodes[c].length));
        }
        out.push(')');
    }
}

fn quote(label: &str) -> String {
    let needs = label
        .chars()
        .any(|c| matches!(c, '(' | ')' | ',' | ':' | ';' | '\'' | '[' | ']') || c.is_whitespace());
    if needs {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_string()
    }
}

/// Parse a rooted Newick string (labels and branch lengths).
pub fn parse_newick(src: &str) -> Result<PhyloTree> {
    let chars: Vec<char> = src.trim().chars().collect();
    let mut pos = 0usize;
    let mut nodes: Vec<Node> = Vec::new();
    let root = parse_subtree(&chars, &mut pos, &mut nodes)?;
    if pos >= chars.len() || chars[pos] != ';' {
        return Err(Error::Newick("missing trailing ';'".into()));
    }
    Ok(PhyloTree { nodes, root })
}

fn parse_subtree(chars: &[char], pos: &mut usize, nodes: &mut Vec<Node>) -> Result<usize> {
    let id = nodes.len();
    nodes.push(Node { parent: None, children: Vec::new(), length: 0.0, label: None, height: 0.0 });
    if *pos < chars.len() && chars[*pos] == '(' {
        *pos += 1;
        loop {
            let child = parse_subtree(chars, pos, nodes)?;
            nodes[child].parent = Some(id);
            nodes[id].children.push(child);
            if *pos < chars.len() && chars[*pos] == ':' {
                *pos += 1;
                nodes[child].length = parse_number(chars, pos)?;
            }
            match chars.get(*pos) {
                Some(',') => *pos += 1,
                Some(')') => {
                    *pos += 1;
                    break;
                }
                _ => return Err(Error::Newick(format!("unbalanced parentheses at {pos}", pos = *pos))),
            }
        }
    }
    let label = parse_label(chars, pos)?;
    if !label.is_empty() {
        nodes[id].label = Some(label);
    }
    Ok(id)
}

fn parse_label(chars: &[char], pos: &mut usize) -> Result<String> {
    if chars.get(*pos) == Some(&'\'') {
        *pos += 1;
        let mut out = String::new();
        loop {
            match chars.get(*pos) {
                Some('\'') if chars.get(*pos + 1) == Some(&'\'') => {
                    out.push('\'');
                    *pos += 2;
                }
                Some('\'') => {
                    *pos += 1;
                    return Ok(out);
                }
                Some(&c) => {
                    out.push(c);
                    *pos += 1;
                }
                None => return Err(Error::Newick("unterminated quoted label".into())),
            }
        }
    }
    let start = *pos;
    while let Some(&c) = chars.get(*pos) {
        if matches!(c, '(' | ')' | ',' | ':' | ';') || c.is_whitespace() {
            break;
        }
        *pos += 1;
    }
    Ok(chars[start..*pos].iter().collect())
}

fn parse_number(chars: &[char], pos: &mut usize) -> Result<f64> {
    let start = *pos;
    while let Some(&c) = chars.get(*pos) {
        if c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E') {
            *pos += 1;
        } else {
            break;
        }
    }
    let s: String = chars[start..*pos].iter().collect();
    s.parse().map_err(|_| Error::Newick(format!("bad branch length {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DistanceMatrix;
    use crate::phylo::{upgma, TimeScale};

    #[test]
    fn serializes_deterministically() {
        // Build twice with reversed label order: the string must agree up to
        // the induced tree (same topology, same label sets).
        let m = DistanceMatrix::new(
            vec!["b".into(), "a".into(), "c".into()],
            vec![
                vec![0.0, 0.1, 0.4],
                vec![0.1, 0.0, 0.4],
                vec![0.4, 0.4, 0.0],
            ],
        )
        .unwrap();
        let scale = TimeScale::new(1.0, 2010.0).unwrap();
        let t = upgma(&m, &scale).unwrap();
        let s = to_newick(&t);
        assert!(s.starts_with("((a:"), "got {s}");
        assert!(s.ends_with(';'));
    }

    #[test]
    fn quoting() {
        assert_eq!(quote("abc"), "abc");
        assert_eq!(quote("fenoarivo-est"), "fenoarivo-est");
        assert_eq!(quote("two words"), "'two words'");
        assert_eq!(quote("o'he"), "'o''he'");
    }

    #[test]
    fn round_trip() {
        let src = "((a:0.05,b:0.05):0.1,(c:0.07,'d e':0.07):0.08);";
        let t = parse_newick(src).unwrap();
        assert_eq!(to_newick(&t), src);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_newick("((a,b);").is_err());
        assert!(parse_newick("(a:x,b:1);").is_err());
        assert!(parse_newick("(a,b)").is_err());
    }

    #[test]
    fn fixture_round_trip() {
        let m = crate::fixtures::reference_matrix();
        let scale = TimeScale::new(2e-4, 2010.0).unwrap();
        let t = upgma(&m, &scale).unwrap();
        let s = to_newick(&t);
        let back = parse_newick(&s).unwrap();
        assert_eq!(to_newick(&back), s);
        assert_eq!(back.leaves().len(), 23);
    }
}
