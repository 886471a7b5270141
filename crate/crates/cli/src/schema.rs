//! JSON formats for function spaces and differential operators.

use ellipsis_core::diffop::SymbolReport;
use ellipsis_core::{
    Coefficient, DiffOp, Domain, DomainFn, Exact, FunctionSpace, Grid, GridField, MultiIndex, Phase, TrigPoly,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::value::{CoeffValue, Codec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub freq: Vec<i64>,
    pub phase: Phase,
    pub coeff: CoeffValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisElement {
    /// 0-based component carrying the element; it vanishes on the others.
    #[serde(default)]
    pub component: usize,
    pub terms: Vec<TermSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisFile {
    pub dimension: usize,
    #[serde(default = "one")]
    pub components: usize,
    pub mode: Mode,
    pub basis: Vec<BasisElement>,
}

/// A function space in the scalar mode requested by its file.
#[derive(Clone, Debug, PartialEq)]
pub enum AnySpace {
    Exact(FunctionSpace<Exact>),
    Float(FunctionSpace<f64>),
}

impl AnySpace {
    pub fn mode(&self) -> Mode {
        match self {
            AnySpace::Exact(_) => Mode::Exact,
            AnySpace::Float(_) => Mode::Float,
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            AnySpace::Exact(s) => *s.domain(),
            AnySpace::Float(s) => *s.domain(),
        }
    }

    pub fn to_f64(&self) -> FunctionSpace<f64> {
        match self {
            AnySpace::Exact(s) => s.to_f64(),
            AnySpace::Float(s) => s.clone(),
        }
    }

    /// Converts between modes; floats become exact through their binary value.
    pub fn with_mode(self, mode: Mode) -> AnySpace {
        match (self, mode) {
            (AnySpace::Exact(s), Mode::Float) => AnySpace::Float(s.to_f64()),
            (AnySpace::Float(s), Mode::Exact) => {
                AnySpace::Exact(s.map_coeffs(|c| Exact::from_f64(*c).expect("finite coefficient")))
            }
            (s, _) => s,
        }
    }
}

fn decode_terms<S: Codec>(dim: usize, terms: &[TermSpec], warnings: &mut Vec<String>) -> Result<TrigPoly<S>, CliError> {
    let mut parsed = Vec::with_capacity(terms.len());
    for t in terms {
        if t.freq.len() != dim {
            return Err(CliError::invalid(format!(
                "frequency {:?} has length {}, expected {}",
                t.freq,
                t.freq.len(),
                dim
            )));
        }
        parsed.push((t.freq.clone(), t.phase, S::decode(&t.coeff, warnings)?));
    }
    Ok(TrigPoly::from_terms(dim, parsed)?)
}

fn encode_terms<S: Codec>(p: &TrigPoly<S>) -> Vec<TermSpec> {
    p.terms()
        .map(|(k, c)| TermSpec {
            freq: k.freq.clone(),
            phase: k.phase,
            coeff: c.encode(),
        })
        .collect()
}

fn build_space<S: Codec>(file: &BasisFile, warnings: &mut Vec<String>) -> Result<FunctionSpace<S>, CliError> {
    let domain = Domain::new(file.dimension, file.components)?;
    let mut basis = Vec::with_capacity(file.basis.len());
    for (i, e) in file.basis.iter().enumerate() {
        if e.component >= file.components {
            return Err(CliError::invalid(format!(
                "basis element {} names component {} of {}",
                i + 1,
                e.component,
                file.components
            )));
        }
        let p = decode_terms::<S>(file.dimension, &e.terms, warnings)?;
        basis.push(DomainFn::on_component(&domain, e.component, p));
    }
    Ok(FunctionSpace::new(domain, basis)?)
}

/// Parsed space plus warnings about lossy coefficient conversions.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedBasis {
    pub space: AnySpace,
    pub warnings: Vec<String>,
}

pub fn parse_basis(text: &str) -> Result<ParsedBasis, CliError> {
    let file: BasisFile = serde_json::from_str(text)?;
    let mut warnings = Vec::new();
    let space = match file.mode {
        Mode::Exact => AnySpace::Exact(build_space(&file, &mut warnings)?),
        Mode::Float => AnySpace::Float(build_space(&file, &mut warnings)?),
    };
    Ok(ParsedBasis { space, warnings })
}

/// Fails for elements supported on more than one component.
pub fn basis_file<S: Codec>(space: &FunctionSpace<S>) -> Result<BasisFile, CliError> {
    let domain = space.domain();
    let mut basis = Vec::with_capacity(space.len());
    for (i, f) in space.basis().iter().enumerate() {
        let support: Vec<usize> = (0..domain.components()).filter(|&c| !f.part(c).is_zero()).collect();
        if support.len() > 1 {
            return Err(CliError::invalid(format!(
                "basis element {} lives on several components",
                i + 1
            )));
        }
        let component = support.first().copied().unwrap_or(0);
        basis.push(BasisElement {
            component,
            terms: encode_terms(f.part(component)),
        });
    }
    Ok(BasisFile {
        dimension: domain.dimension(),
        components: domain.components(),
        mode: S::MODE,
        basis,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CoeffSpec {
    Const {
        value: CoeffValue,
    },
    /// One term list per component.
    Trig {
        parts: Vec<Vec<TermSpec>>,
    },
    /// Values on the uniform grid of the given resolution, in grid order.
    Grid {
        resolution: usize,
        values: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorTerm {
    pub index: Vec<u32>,
    pub coeff: CoeffSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    pub dimension: usize,
    #[serde(default = "one")]
    pub components: usize,
    pub mode: Mode,
    pub order: u32,
    pub terms: Vec<OperatorTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol_report: Option<SymbolReport>,
}

pub fn operator_file<S: Codec>(op: &DiffOp<S>, symbol: Option<SymbolReport>) -> OperatorFile {
    let terms = op
        .terms()
        .map(|(idx, c)| OperatorTerm {
            index: idx.entries().to_vec(),
            coeff: match c {
                Coefficient::Constant(v) => CoeffSpec::Const { value: v.encode() },
                Coefficient::Analytic(f) => CoeffSpec::Trig {
                    parts: f.parts().iter().map(encode_terms).collect(),
                },
                Coefficient::Sampled(g) => CoeffSpec::Grid {
                    resolution: g.grid().resolution(),
                    values: g.values().to_vec(),
                },
            },
        })
        .collect();
    OperatorFile {
        dimension: op.dimension(),
        components: op.domain().components(),
        mode: S::MODE,
        order: op.order(),
        terms,
        symbol_report: symbol,
    }
}

/// Reads coefficients in the scalar type `S`, whatever the file's mode.
pub fn decode_operator<S: Codec>(file: &OperatorFile, warnings: &mut Vec<String>) -> Result<DiffOp<S>, CliError> {
    let domain = Domain::new(file.dimension, file.components)?;
    let mut terms = Vec::with_capacity(file.terms.len());
    for t in &file.terms {
        if t.index.len() != file.dimension {
            return Err(CliError::invalid(format!(
                "multi-index {:?} has length {}, expected {}",
                t.index,
                t.index.len(),
                file.dimension
            )));
        }
        let c = match &t.coeff {
            CoeffSpec::Const { value } => Coefficient::Constant(S::decode(value, warnings)?),
            CoeffSpec::Trig { parts } => {
                if parts.len() != file.components {
                    return Err(CliError::invalid(format!(
                        "trig coefficient has {} parts for {} components",
                        parts.len(),
                        file.components
                    )));
                }
                let parts = parts
                    .iter()
                    .map(|p| decode_terms::<S>(file.dimension, p, warnings))
                    .collect::<Result<Vec<_>, _>>()?;
                Coefficient::Analytic(DomainFn::from_parts(parts))
            }
            CoeffSpec::Grid { resolution, values } => {
                let grid = Grid::new(&domain, *resolution)?;
                if values.len() != grid.len() {
                    return Err(CliError::invalid(format!(
                        "grid coefficient has {} values, expected {}",
                        values.len(),
                        grid.len()
                    )));
                }
                Coefficient::Sampled(GridField::new(grid, values.clone()))
            }
        };
        terms.push((MultiIndex::new(t.index.clone()), c));
    }
    let op = DiffOp::from_terms(domain, terms)?;
    if op.order() != file.order {
        return Err(CliError::invalid(format!(
            "declared order {} but terms have order {}",
            file.order,
            op.order()
        )));
    }
    Ok(op)
}

pub fn parse_operator<S: Codec>(text: &str, warnings: &mut Vec<String>) -> Result<DiffOp<S>, CliError> {
    let file: OperatorFile = serde_json::from_str(text)?;
    decode_operator(&file, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ellipsis_core::diffop::laplacian_power;

    const HARMONIC: &str = r#"{
        "dimension": 1, "components": 1, "mode": "exact",
        "basis": [
            {"component": 0, "terms": [{"freq": [1], "phase": "sin", "coeff": "1"}]},
            {"component": 0, "terms": [{"freq": [-1], "phase": "cos", "coeff": 2}]}
        ]
    }"#;

    #[test]
    fn basis_round_trip() {
        let parsed = parse_basis(HARMONIC).unwrap();
        assert!(parsed.warnings.is_empty());
        let AnySpace::Exact(s) = &parsed.space else { panic!("exact mode") };
        assert_eq!(s.len(), 2);
        let text = serde_json::to_string(&basis_file(s).unwrap()).unwrap();
        assert_eq!(parse_basis(&text).unwrap().space, parsed.space);
    }

    #[test]
    fn unknown_fields_and_zero_elements_are_rejected() {
        let extra = HARMONIC.replace("\"mode\"", "\"colour\": 1, \"mode\"");
        assert!(matches!(parse_basis(&extra), Err(CliError::Json(_))));
        let zero = r#"{"dimension": 1, "mode": "float", "basis": [
            {"terms": [{"freq": [0], "phase": "sin", "coeff": 1}]}]}"#;
        assert!(matches!(
            parse_basis(zero),
            Err(CliError::Core(ellipsis_core::Error::DependentBasis { position: 1 }))
        ));
    }

    #[test]
    fn operator_round_trip() {
        let d = Domain::torus(2);
        let t = Exact::tau();
        let t2 = &t * &t;
        let mut op = laplacian_power::<Exact>(d, 2).unwrap();
        op.add_term(MultiIndex::zero(2), Coefficient::Constant(-(&t2 * &t2))).unwrap();
        op.add_term(
            MultiIndex::unit(2, 1),
            Coefficient::Analytic(DomainFn::single(TrigPoly::monomial(&[1, -2], Phase::Sin, Exact::from_ratio(1, 3)))),
        )
        .unwrap();
        let text = serde_json::to_string_pretty(&operator_file(&op, None)).unwrap();
        let back: DiffOp<Exact> = parse_operator(&text, &mut Vec::new()).unwrap();
        assert_eq!(back, op);

        let grid = Grid::new(&d, 4).unwrap();
        let values = (0..grid.len()).map(|i| (i as f64 * 0.1).sin() / 3.0).collect();
        let mut sampled = laplacian_power::<f64>(d, 1).unwrap();
        sampled.add_term(MultiIndex::zero(2), Coefficient::Sampled(GridField::new(grid, values))).unwrap();
        let text = serde_json::to_string(&operator_file(&sampled, None)).unwrap();
        let back: DiffOp<f64> = parse_operator(&text, &mut Vec::new()).unwrap();
        assert_eq!(back, sampled);
    }

    #[test]
    fn declared_order_must_match() {
        let text = r#"{"dimension": 1, "mode": "float", "order": 3,
            "terms": [{"index": [2], "coeff": {"kind": "const", "value": 1}}]}"#;
        assert!(matches!(parse_operator::<f64>(text, &mut Vec::new()), Err(CliError::Invalid(_))));
        let text = r#"{"dimension": 1, "mode": "float", "order": 2,
            "terms": [{"index": [2], "coeff": {"kind": "const", "value": 1, "extra": 0}}]}"#;
        assert!(parse_operator::<f64>(text, &mut Vec::new()).is_err());
    }
}
