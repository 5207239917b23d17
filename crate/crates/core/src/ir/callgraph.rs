use std::collections::HashMap;

use crate::error::{Error, Result};

use super::{Inst, InstKind, Program};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CallEdge {
    pub caller: String,
    pub callee: String,
    /// Call-site ordinal within the caller, in program order.
    pub site: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CallGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<CallEdge>,
    /// Depth-first preorder from the entry, then from any unreached module.
    pub preorder: Vec<String>,
    /// Every callee precedes all of its callers.
    pub postorder: Vec<String>,
}

impl CallGraph {
    pub fn callees<'a>(&'a self, caller: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges
            .iter()
            .filter(move |e| e.caller == caller)
            .map(|e| e.callee.as_str())
    }
}

pub fn build_call_graph(p: &Program) -> Result<CallGraph> {
    let nodes: Vec<String> = p.modules.keys().cloned().collect();
    let mut edges = Vec::new();
    for (name, m) in &p.modules {
        let mut site = 0;
        collect_calls(&m.body, &mut |callee| {
            edges.push(CallEdge {
                caller: name.clone(),
                callee: callee.to_string(),
                site,
            });
            site += 1;
        });
    }
    let (preorder, postorder) = traverse(&nodes, &edges, &p.entry)?;
    Ok(CallGraph {
        nodes,
        edges,
        preorder,
        postorder,
    })
}

fn collect_calls(body: &[Inst], f: &mut impl FnMut(&str)) {
    for i in body {
        if let InstKind::Call { callee, .. } = &i.kind {
            f(callee);
        }
        for b in i.children() {
            collect_calls(b, f);
        }
    }
}

/// Depth-first traversal producing preorder and postorder; fails with the
/// offending cycle if the graph is not acyclic.
pub fn traverse(
    nodes: &[String],
    edges: &[CallEdge],
    entry: &str,
) -> Result<(Vec<String>, Vec<String>)> {
    let index: HashMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for e in edges {
        if let (Some(&a), Some(&b)) = (index.get(e.caller.as_str()), index.get(e.callee.as_str()))
        {
            if !succ[a].contains(&b) {
                succ[a].push(b);
            }
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; nodes.len()];
    let mut pre = Vec::new();
    let mut post = Vec::new();
    let roots = index
        .get(entry)
        .copied()
        .into_iter()
        .chain(0..nodes.len());
    for root in roots {
        if state[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        state[root] = 1;
        pre.push(root);
        while let Some(top) = stack.last_mut() {
            let n = top.0;
            if top.1 < succ[n].len() {
                let c = succ[n][top.1];
                top.1 += 1;
                match state[c] {
                    0 => {
                        state[c] = 1;
                        pre.push(c);
                        stack.push((c, 0));
                    }
                    1 => {
                        let start = stack.iter().position(|&(x, _)| x == c).unwrap();
                        let mut cycle: Vec<String> =
                            stack[start..].iter().map(|&(x, _)| nodes[x].clone()).collect();
                        cycle.push(nodes[c].clone());
                        return Err(Error::Recursion { cycle });
                    }
                    _ => {}
                }
            } else {
                state[n] = 2;
                post.push(n);
                stack.pop();
            }
        }
    }
    let names = |v: Vec<usize>| v.into_iter().map(|i| nodes[i].clone()).collect();
    Ok((names(pre), names(post)))
}

#[cfg(test)]
mod tests {
    use crate::frontend::compile_source;

    use super::*;

    #[test]
    fn chain_postorder() {
        let p = compile_source(
            "module b(qbit q[1]){ H(q[0]); } module a(qbit q[1]){ b(q); } module main(){ qbit q[1]; a(q); }",
        )
        .unwrap();
        let g = build_call_graph(&p).unwrap();
        assert_eq!(g.postorder, vec!["b", "a", "main"]);
        assert_eq!(g.preorder, vec!["main", "a", "b"]);
        assert_eq!(g.edges.len(), 2);
    }

    #[test]
    fn single_module() {
        let p = compile_source("module main(){ }").unwrap();
        let g = build_call_graph(&p).unwrap();
        assert_eq!(g.nodes, vec!["main"]);
        assert!(g.edges.is_empty());
    }
}
