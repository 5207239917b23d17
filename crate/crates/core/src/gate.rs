use std::fmt;
use std::str::FromStr;

/// The supported primitive gates.
///
/// Operand order is target first: `CNOT(t, c)` flips `t` when `c` is set and
/// `Toffoli(t, c1, c2)` flips `t` when both controls are set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    S,
    Sdag,
    T,
    Tdag,
    Cnot,
    Toffoli,
    Rx,
    Ry,
    Rz,
    PrepZ,
    MeasZ,
}

impl GateKind {
    pub const ALL: [GateKind; 15] = [
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::S,
        GateKind::Sdag,
        GateKind::T,
        GateKind::Tdag,
        GateKind::Cnot,
        GateKind::Toffoli,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::PrepZ,
        GateKind::MeasZ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::Sdag => "Sdag",
            GateKind::T => "T",
            GateKind::Tdag => "Tdag",
            GateKind::Cnot => "CNOT",
            GateKind::Toffoli => "Toffoli",
            GateKind::Rx => "Rx",
            GateKind::Ry => "Ry",
            GateKind::Rz => "Rz",
            GateKind::PrepZ => "PrepZ",
            GateKind::MeasZ => "MeasZ",
        }
    }

    /// Number of qubit operands.
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot => 2,
            GateKind::Toffoli => 3,
            _ => 1,
        }
    }

    pub fn has_angle(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }

    /// CNOT and Toffoli: the gates that may create entanglement.
    pub fn is_controlled(self) -> bool {
        matches!(self, GateKind::Cnot | GateKind::Toffoli)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownGate(pub String);

impl FromStr for GateKind {
    type Err = UnknownGate;

    /// Accepts the canonical names plus the lowercase netlist aliases
    /// `not`, `cnot` and `toffoli`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kind = match s {
            "X" | "not" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "H" => GateKind::H,
            "S" => GateKind::S,
            "Sdag" => GateKind::Sdag,
            "T" => GateKind::T,
            "Tdag" => GateKind::Tdag,
            "CNOT" | "cnot" => GateKind::Cnot,
            "Toffoli" | "toffoli" => GateKind::Toffoli,
            "Rx" => GateKind::Rx,
            "Ry" => GateKind::Ry,
            "Rz" => GateKind::Rz,
            "PrepZ" => GateKind::PrepZ,
            "MeasZ" => GateKind::MeasZ,
            _ => return Err(UnknownGate(s.to_string())),
        };
        Ok(kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for g in GateKind::ALL {
            assert_eq!(g.name().parse::<GateKind>().unwrap(), g);
        }
        assert_eq!("toffoli".parse::<GateKind>().unwrap(), GateKind::Toffoli);
        assert!("CZ".parse::<GateKind>().is_err());
    }
}
