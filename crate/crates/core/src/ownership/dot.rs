use super::{ControlNetwork, EquityGraph};
use crate::error::{Error, Result};
use crate::numfmt::fmt_sig;

/// Nodes and edges of a DOT digraph as emitted by [`export_network_dot`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DotGraph {
    pub name: String,
    /// `(node id, label)`
    pub nodes: Vec<(String, String)>,
    /// `(from, to, label)`
    pub edges: Vec<(String, String, String)>,
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Renders one control network as a DOT digraph: the parent first, then
/// subsidiaries by `(level, id)`, each labelled with its country code;
/// hierarchy links carry the controller's stake.
pub fn export_network_dot(network: &ControlNetwork, graph: &EquityGraph) -> String {
    let label = |id: &str| {
        graph
            .country_of(id)
            .map(|c| c.to_string())
            .unwrap_or_default()
    };
    let mut s = format!("digraph {} {{\n", quote(&network.parent));
    s.push_str(&format!(
        "  {} [label={}];\n",
        quote(&network.parent),
        quote(&label(&network.parent))
    ));
    for a in &network.assignments {
        s.push_str(&format!(
            "  {} [label={}];\n",
            quote(&a.subsidiary),
            quote(&label(&a.subsidiary))
        ));
    }
    for a in &network.assignments {
        s.push_str(&format!(
            "  {} -> {} [label={}];\n",
            quote(&a.controller),
            quote(&a.subsidiary),
            quote(&fmt_sig(a.share))
        ));
    }
    s.push_str("}\n");
    s
}

/// Parses the DOT subset written by [`export_network_dot`].
pub fn parse_dot(text: &str) -> Result<DotGraph> {
    let mut g = DotGraph::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let err = |m: &str| Error::parse("dot", n + 1, m.to_string());
        if line.is_empty() || line == "}" {
            continue;
        }
        if let Some(rest) = line.strip_prefix("digraph ") {
            let rest = rest.trim_end_matches('{').trim();
            g.name = unquote_all(rest).map_err(|m| err(&m))?.pop().unwrap_or_default();
            continue;
        }
        let body = line
            .strip_suffix(';')
            .ok_or_else(|| err("statement must end with `;`"))?;
        let (head, attrs) = body
            .split_once('[')
            .ok_or_else(|| err("missing attribute list"))?;
        let attrs = attrs
            .trim()
            .strip_suffix(']')
            .ok_or_else(|| err("unterminated attribute list"))?;
        let label = attrs
            .trim()
            .strip_prefix("label=")
            .ok_or_else(|| err("missing label"))?;
        let label = unquote_all(label).map_err(|m| err(&m))?.pop().unwrap_or_default();
        let ids = unquote_all(head).map_err(|m| err(&m))?;
        match (ids.len(), head.contains("->")) {
            (1, false) => g.nodes.push((ids[0].clone(), label)),
            (2, true) => g.edges.push((ids[0].clone(), ids[1].clone(), label)),
            _ => return Err(err("expected a node or a single edge")),
        }
    }
    Ok(g)
}

/// Extracts every double-quoted string in `s`, unescaping `\"` and `\\`.
fn unquote_all(s: &str) -> std::result::Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '"' {
            continue;
        }
        let mut cur = String::new();
        loop {
            match chars.next() {
                None => return Err("unterminated string".into()),
                Some('"') => break,
                Some('\\') => cur.push(chars.next().ok_or("dangling escape")?),
                Some(c) => cur.push(c),
            }
        }
        out.push(cur);
    }
    Ok(out)
}
