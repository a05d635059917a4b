//! Destination classes y(c): a first-match rule cascade over element grades.

use std::collections::BTreeMap;
use std::fmt;

use super::ChemistryError;
use crate::num::Real;

/// Ordinal of a destination class within its [`DestinationScheme`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub u8);

/// Coarse material grouping used by the stratification report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassGroup {
    HighGrade,
    Blended,
    LowGrade,
    Waste,
    Other,
}

impl ClassGroup {
    /// Groups by name prefix: `HG`, `BL*`, `LG*`, `W*`.
    pub fn from_name(name: &str) -> Self {
        if name.starts_with("HG") {
            Self::HighGrade
        } else if name.starts_with("BL") {
            Self::Blended
        } else if name.starts_with("LG") {
            Self::LowGrade
        } else if name.starts_with('W') {
            Self::Waste
        } else {
            Self::Other
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparison {
    fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Self::Lt => value < threshold,
            Self::Le => value <= threshold,
            Self::Gt => value > threshold,
            Self::Ge => value >= threshold,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Self::Lt => "<",
            Self::Le => "<=",
            Self::Gt => ">",
            Self::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub element: String,
    pub comparison: Comparison,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub class: ClassId,
    /// Conjunction; an empty list always matches.
    pub conditions: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DestinationScheme {
    names: Vec<String>,
    rules: Vec<Rule>,
}

pub const DEFAULT_CLASS_ORDER: &str = "HG,BLS,BLA,LGS,LGA,W1,W23";
/// Waste rules come first so that LG covers Fe in [50, 55) only.
pub const DEFAULT_CLASS_RULES: &str =
    "W23: Al2O3>=6; W1: Fe<50; HG: Fe>=60; BLS: Fe>=55 & Al2O3<3; BLA: Fe>=55; LGS: Al2O3<3; LGA: *";

impl Default for DestinationScheme {
    fn default() -> Self {
        Self::parse(DEFAULT_CLASS_ORDER, DEFAULT_CLASS_RULES)
            .expect("built-in destination scheme parses")
    }
}

impl DestinationScheme {
    /// Parses a comma-separated class list (defining ordinals) and a
    /// `;`-separated cascade of `NAME: cond & cond` rules. The last rule
    /// must be the catch-all `NAME: *` so that classification is total.
    pub fn parse(order: &str, rules: &str) -> Result<Self, ChemistryError> {
        let bad = |msg: String| ChemistryError::Scheme(msg);
        let names: Vec<String> = order
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if names.is_empty() || names.len() > u8::MAX as usize {
            return Err(bad(format!("class list must have 1..=255 names, got {}", names.len())));
        }
        let mut seen = BTreeMap::new();
        for (i, n) in names.iter().enumerate() {
            if seen.insert(n.clone(), i).is_some() {
                return Err(bad(format!("duplicate class '{n}'")));
            }
        }
        let mut parsed = Vec::new();
        for chunk in rules.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, body) = chunk
                .split_once(':')
                .ok_or_else(|| bad(format!("rule '{chunk}' lacks 'NAME:'")))?;
            let name = name.trim();
            let class = *seen
                .get(name)
                .ok_or_else(|| bad(format!("rule names unknown class '{name}'")))?;
            let body = body.trim();
            let mut conditions = Vec::new();
            if body != "*" {
                for cond in body.split('&').map(str::trim) {
                    conditions.push(parse_condition(cond).map_err(bad)?);
                }
            }
            parsed.push(Rule {
                class: ClassId(class as u8),
                conditions,
            });
        }
        match parsed.last() {
            Some(r) if r.conditions.is_empty() => {}
            _ => return Err(bad("last rule must be a catch-all 'NAME: *'".to_string())),
        }
        Ok(Self {
            names,
            rules: parsed,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, c: ClassId) -> &str {
        &self.names[c.0 as usize]
    }

    pub fn class_by_name(&self, name: &str) -> Option<ClassId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| ClassId(i as u8))
    }

    pub fn group(&self, c: ClassId) -> ClassGroup {
        ClassGroup::from_name(self.name(c))
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> {
        (0..self.names.len()).map(|i| ClassId(i as u8))
    }

    /// Every element some rule reads.
    pub fn elements(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .rules
            .iter()
            .flat_map(|r| r.conditions.iter().map(|c| c.element.as_str()))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// First matching rule wins.
    pub fn classify<T: Real>(&self, chemistry: &BTreeMap<String, T>) -> Result<ClassId, ChemistryError> {
        for e in self.elements() {
            if !chemistry.contains_key(e) {
                return Err(ChemistryError::MissingElement {
                    element: e.to_string(),
                    context: "classification".to_string(),
                });
            }
        }
        for rule in &self.rules {
            let hit = rule.conditions.iter().all(|c| {
                let v = chemistry[c.element.as_str()].to_f64_lossy();
                c.comparison.holds(v, c.threshold)
            });
            if hit {
                return Ok(rule.class);
            }
        }
        unreachable!("scheme ends with a catch-all rule")
    }

    /// Config representation `(order, rules)` that [`Self::parse`] accepts.
    pub fn to_config(&self) -> (String, String) {
        let rules: Vec<String> = self.rules.iter().map(|r| r.to_string_with(self)).collect();
        (self.names.join(","), rules.join("; "))
    }
}

impl Rule {
    fn to_string_with(&self, scheme: &DestinationScheme) -> String {
        let body = if self.conditions.is_empty() {
            "*".to_string()
        } else {
            self.conditions
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" & ")
        };
        format!("{}: {}", scheme.name(self.class), body)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.element, self.comparison.symbol(), self.threshold)
    }
}

fn parse_condition(s: &str) -> Result<Condition, String> {
    // Longest operators first so "<=" is not read as "<".
    for (sym, cmp) in [
        ("<=", Comparison::Le),
        (">=", Comparison::Ge),
        ("<", Comparison::Lt),
        (">", Comparison::Gt),
    ] {
        if let Some((lhs, rhs)) = s.split_once(sym) {
            let element = lhs.trim();
            if element.is_empty() {
                return Err(format!("condition '{s}' lacks an element"));
            }
            let threshold: f64 = rhs
                .trim()
                .parse()
                .map_err(|_| format!("condition '{s}' has invalid threshold"))?;
            return Ok(Condition {
                element: element.to_string(),
                comparison: cmp,
                threshold,
            });
        }
    }
    Err(format!("condition '{s}' has no comparison operator"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chem(fe: f64, al: f64) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("Fe".to_string(), fe),
            ("Al2O3".to_string(), al),
            ("SiO2".to_string(), 3.0),
        ])
    }

    fn class(fe: f64, al: f64) -> String {
        let s = DestinationScheme::default();
        s.name(s.classify(&chem(fe, al)).unwrap()).to_string()
    }

    #[test]
    fn published_grade_blocks() {
        assert_eq!(class(63.558, 1.977), "HG");
        assert_eq!(class(47.969, 1.762), "W1");
        assert_eq!(class(56.618, 3.034), "BLA");
    }

    #[test]
    fn inclusive_boundaries() {
        assert_eq!(class(60.0, 0.0), "HG");
        assert_eq!(class(55.0, 2.999), "BLS");
        assert_eq!(class(55.0, 3.0), "BLA");
        assert_eq!(class(50.0, 1.0), "LGS");
        assert_eq!(class(54.999, 3.0), "LGA");
        assert_eq!(class(49.999, 1.0), "W1");
        assert_eq!(class(65.0, 6.0), "W23");
    }

    #[test]
    fn ordinals_follow_declared_order() {
        let s = DestinationScheme::default();
        assert_eq!(s.len(), 7);
        assert_eq!(s.class_by_name("HG"), Some(ClassId(0)));
        assert_eq!(s.class_by_name("W23"), Some(ClassId(6)));
        assert_eq!(s.group(ClassId(2)), ClassGroup::Blended);
        assert_eq!(s.group(ClassId(5)), ClassGroup::Waste);
    }

    #[test]
    fn missing_element_is_an_error() {
        let s = DestinationScheme::default();
        let c = BTreeMap::from([("Fe".to_string(), 61.0)]);
        assert!(matches!(
            s.classify(&c),
            Err(ChemistryError::MissingElement { .. })
        ));
    }

    #[test]
    fn config_round_trip() {
        let s = DestinationScheme::default();
        let (o, r) = s.to_config();
        assert_eq!(DestinationScheme::parse(&o, &r).unwrap(), s);
    }

    #[test]
    fn rejects_scheme_without_catch_all() {
        assert!(DestinationScheme::parse("A,B", "A: Fe>1; B: Fe<1").is_err());
        assert!(DestinationScheme::parse("A", "B: *").is_err());
    }
}
