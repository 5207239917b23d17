use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::Result;
use crate::flatten::{FlatInst, MemoKey, SpecializedProgram};
use crate::gate::GateKind;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResourceRow {
    pub key: MemoKey,
    /// Name of the specialized module.
    pub module: String,
    /// Qubits declared locally plus the most any callee declares.
    pub qubits: BigUint,
    /// Gate counts indexed by `GateKind::index`.
    pub gates: Vec<BigUint>,
}

impl ResourceRow {
    pub fn count(&self, k: GateKind) -> &BigUint {
        &self.gates[k.index()]
    }

    pub fn total(&self) -> BigUint {
        self.gates.iter().sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResourceTable {
    /// One row per specialized module, callees before callers.
    pub rows: Vec<ResourceRow>,
    pub entry: String,
}

impl ResourceTable {
    pub fn row(&self, module: &str) -> Option<&ResourceRow> {
        self.rows.iter().find(|r| r.module == module)
    }

    pub fn entry_row(&self) -> Option<&ResourceRow> {
        self.row(&self.entry)
    }

    fn kinds(&self) -> Vec<GateKind> {
        GateKind::ALL
            .into_iter()
            .filter(|k| self.rows.iter().any(|r| !r.count(*k).is_zero()))
            .collect()
    }

    /// Header plus one comma-separated line per row; every gate kind gets a
    /// column.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("module,int_params,real_params,qubits");
        for k in GateKind::ALL {
            let _ = write!(s, ",{}", k.name());
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(
                s,
                "{},\"{}\",\"{}\",{}",
                r.key.module,
                r.key.int_params(),
                r.key.real_params(),
                r.qubits
            );
            for g in &r.gates {
                let _ = write!(s, ",{g}");
            }
            s.push('\n');
        }
        s
    }

    /// Aligned text table showing the gate kinds that occur.
    pub fn to_text(&self) -> String {
        let kinds = self.kinds();
        let mut head = vec![
            "Module".to_string(),
            "IntegerParam".to_string(),
            "DoubleParam".to_string(),
            "Qubit".to_string(),
        ];
        head.extend(kinds.iter().map(|k| k.name().to_string()));
        let mut rows = vec![head];
        for r in &self.rows {
            let mut row = vec![
                r.key.module.clone(),
                or_zero(r.key.int_params()),
                or_zero(r.key.real_params()),
                r.qubits.to_string(),
            ];
            row.extend(kinds.iter().map(|k| r.count(*k).to_string()));
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut s = String::new();
        for row in rows {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (v, w))| {
                    if c == 0 {
                        format!("{v:<w$}")
                    } else {
                        format!("{v:>w$}")
                    }
                })
                .collect();
            s.push_str(cells.join("  ").trim_end());
            s.push('\n');
        }
        s
    }
}

fn or_zero(s: String) -> String {
    if s.is_empty() {
        "0".into()
    } else {
        s
    }
}

/// Count gates and qubits per specialized module in call-graph postorder.
/// Callee rows are reused at every call; repeat and forall counts multiply.
pub fn estimate_resources(p: &SpecializedProgram) -> Result<ResourceTable> {
    let keys: HashMap<&str, &MemoKey> = p
        .specialization_index
        .iter()
        .map(|(k, n)| (n.as_str(), k))
        .collect();
    let mut rows: HashMap<String, ResourceRow> = HashMap::new();
    let mut order = Vec::new();
    for name in p.postorder()? {
        let m = p.module(&name)?;
        let mut gates = vec![BigUint::zero(); GateKind::ALL.len()];
        let mut callee_qubits = BigUint::zero();
        count(&m.body, &BigUint::from(1u8), &rows, &mut gates, &mut callee_qubits);
        let key = keys
            .get(name.as_str())
            .map(|k| (*k).clone())
            .unwrap_or_else(|| MemoKey::new(&name, &[]));
        let row = ResourceRow {
            key,
            module: name.clone(),
            qubits: BigUint::from(m.local_qubits()) + callee_qubits,
            gates,
        };
        rows.insert(name.clone(), row);
        order.push(name);
    }
    Ok(ResourceTable {
        rows: order.into_iter().map(|n| rows.remove(&n).unwrap()).collect(),
        entry: p.entry.clone(),
    })
}

fn count(
    body: &[FlatInst],
    mult: &BigUint,
    rows: &HashMap<String, ResourceRow>,
    gates: &mut [BigUint],
    callee_qubits: &mut BigUint,
) {
    for i in body {
        match i {
            FlatInst::Gate { kind, .. } => gates[kind.index()] += mult,
            FlatInst::Forall { kind, count, .. } => gates[kind.index()] += mult * *count,
            FlatInst::Call { callee, .. } => {
                if let Some(r) = rows.get(callee) {
                    for (g, c) in gates.iter_mut().zip(&r.gates) {
                        *g += mult * c;
                    }
                    if r.qubits > *callee_qubits {
                        *callee_qubits = r.qubits.clone();
                    }
                }
            }
            FlatInst::Repeat { count: n, body } => {
                if *n > 0 {
                    count(body, &(mult * *n), rows, gates, callee_qubits);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flatten::{expand_trace, flatten_pass_driven, FlattenOptions};
    use crate::frontend::compile_source;

    fn table(src: &str) -> (SpecializedProgram, ResourceTable) {
        let p = flatten_pass_driven(&compile_source(src).unwrap(), &FlattenOptions::default())
            .unwrap();
        let t = estimate_resources(&p).unwrap();
        (p, t)
    }

    #[test]
    fn oracle_loop_rows() {
        let (_, t) = table(include_str!("../../fixtures/oracle_loop.scf"));
        let main = t.entry_row().unwrap();
        assert_eq!(main.count(GateKind::X), &BigUint::from(12000u32));
        assert_eq!(main.count(GateKind::Rz), &BigUint::from(12000u32));
        assert_eq!(main.qubits, BigUint::from(2u8));
        let oracles: Vec<&ResourceRow> =
            t.rows.iter().filter(|r| r.key.module == "Oracle").collect();
        assert_eq!(oracles.len(), 4);
        let mut ints: Vec<String> = oracles.iter().map(|r| r.key.int_params()).collect();
        ints.sort();
        assert_eq!(ints, ["0", "1", "2", "3"]);
        for r in oracles {
            assert_eq!(r.total(), BigUint::from(2u8));
            assert!(r.qubits.is_zero());
        }
        assert!(t.to_csv().lines().count() == 6);
    }

    #[test]
    fn parallel_layer_row() {
        let (_, t) = table(include_str!("../../fixtures/parallel_layer.scf"));
        let main = t.entry_row().unwrap();
        assert_eq!(main.count(GateKind::H), &BigUint::from(1000u32));
        assert_eq!(main.count(GateKind::Cnot), &BigUint::from(1u8));
        assert_eq!(main.qubits, BigUint::from(1000u32));
    }

    #[test]
    fn repeat_multiplies() {
        let src = "module main(){ qbit q[1]; for (int i = 0; i < 7; i++) { H(q[0]); T(q[0]); } }";
        let (p, t) = table(src);
        let trace = expand_trace(&p, None).unwrap();
        for (k, n) in trace.kind_counts() {
            assert_eq!(t.entry_row().unwrap().count(k), &BigUint::from(n));
        }
    }
}
