//! Property functions: the interpretable terms of the surrogate model.
//!
//! A property function maps the full feature vector to one explanatory
//! value. The surrogate is linear in these properties, and each carries its
//! own L1 penalty weight, so harder-to-interpret terms can be priced higher.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Builtin property constructors. Indices are 0-based in code; the textual
/// form used in config files is 1-based (`identity(1)` is the first feature),
/// matching the feature names `x1`, `x2`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyKind {
    Identity { index: usize },
    Product { a: usize, b: usize },
    Square { index: usize },
    Radius,
}

impl PropertyKind {
    /// Parse the textual constructor form: `identity(1)`, `product(1,2)`,
    /// `square(2)`, `radius()` (1-based feature indices).
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let err = || Error::InvalidConfig(format!("unrecognized property `{text}`"));
        let (name, rest) = text.split_once('(').ok_or_else(err)?;
        let args = rest.strip_suffix(')').ok_or_else(err)?;
        let parse_index = |s: &str| -> Result<usize> {
            let i: usize = s.trim().parse().map_err(|_| err())?;
            if i == 0 {
                return Err(Error::InvalidConfig(format!(
                    "property indices are 1-based, got 0 in `{text}`"
                )));
            }
            Ok(i - 1)
        };
        match name.trim() {
            "identity" => Ok(PropertyKind::Identity {
                index: parse_index(args)?,
            }),
            "product" => {
                let (a, b) = args.split_once(',').ok_or_else(err)?;
                Ok(PropertyKind::Product {
                    a: parse_index(a)?,
                    b: parse_index(b)?,
                })
            }
            "square" => Ok(PropertyKind::Square {
                index: parse_index(args)?,
            }),
            "radius" => {
                if args.trim().is_empty() {
                    Ok(PropertyKind::Radius)
                } else {
                    Err(err())
                }
            }
            _ => Err(err()),
        }
    }

    fn default_name(&self) -> String {
        match *self {
            PropertyKind::Identity { index } => format!("x{}", index + 1),
            PropertyKind::Product { a, b } => format!("x{}*x{}", a + 1, b + 1),
            PropertyKind::Square { index } => format!("x{}^2", index + 1),
            PropertyKind::Radius => "radius".to_string(),
        }
    }

    /// Smallest feature-vector length this property can be evaluated on.
    fn required_dim(&self) -> usize {
        match *self {
            PropertyKind::Identity { index } | PropertyKind::Square { index } => index + 1,
            PropertyKind::Product { a, b } => a.max(b) + 1,
            PropertyKind::Radius => 1,
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            PropertyKind::Identity { index } => x[index],
            PropertyKind::Product { a, b } => x[a] * x[b],
            PropertyKind::Square { index } => x[index] * x[index],
            PropertyKind::Radius => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

/// One named explanatory term with its penalty weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyFunction {
    pub name: String,
    pub kind: PropertyKind,
    /// L1 penalty weight of this term's coefficient.
    pub lambda: f64,
}

impl PropertyFunction {
    pub fn new(kind: PropertyKind, lambda: f64) -> Self {
        PropertyFunction {
            name: kind.default_name(),
            kind,
            lambda,
        }
    }

    pub fn identity(index: usize, lambda: f64) -> Self {
        Self::new(PropertyKind::Identity { index }, lambda)
    }

    pub fn product(a: usize, b: usize, lambda: f64) -> Self {
        Self::new(PropertyKind::Product { a, b }, lambda)
    }

    pub fn square(index: usize, lambda: f64) -> Self {
        Self::new(PropertyKind::Square { index }, lambda)
    }

    pub fn radius(lambda: f64) -> Self {
        Self::new(PropertyKind::Radius, lambda)
    }
}

/// The ordered list of property functions; the order fixes coefficient
/// indexing everywhere downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    functions: Vec<PropertyFunction>,
}

impl FeatureMap {
    pub fn new(functions: Vec<PropertyFunction>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::InvalidConfig(
                "feature map needs at least one property".into(),
            ));
        }
        for f in &functions {
            if f.lambda < 0.0 || f.lambda.is_nan() {
                return Err(Error::InvalidConfig(format!(
                    "lambda for `{}` must be non-negative, got {}",
                    f.name, f.lambda
                )));
            }
        }
        for (i, f) in functions.iter().enumerate() {
            if functions[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate property name `{}`",
                    f.name
                )));
            }
        }
        Ok(FeatureMap { functions })
    }

    /// The raw features `x1..x<dim>` as properties, all with one lambda.
    pub fn identity(dim: usize, lambda: f64) -> Self {
        FeatureMap {
            functions: (0..dim)
                .map(|i| PropertyFunction::identity(i, lambda))
                .collect(),
        }
    }

    pub fn functions(&self) -> &[PropertyFunction] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.functions.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.functions.iter().map(|f| f.lambda).collect()
    }

    /// Smallest feature-vector length every property can be evaluated on.
    pub fn required_dim(&self) -> usize {
        self.functions
            .iter()
            .map(|f| f.kind.required_dim())
            .max()
            .unwrap_or(0)
    }
}

/// Evaluate every property on one feature vector, in map order.
pub fn apply_map(map: &FeatureMap, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < map.required_dim() {
        return Err(Error::DimensionMismatch {
            expected: map.required_dim(),
            got: x.len(),
        });
    }
    map.functions
        .iter()
        .map(|f| {
            let v = f.kind.eval(x);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFiniteProperty {
                    name: f.name.clone(),
                })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_map_echoes_features() {
        let map = FeatureMap::identity(2, 0.0);
        assert_eq!(apply_map(&map, &[10.0, 10.0]).unwrap(), vec![10.0, 10.0]);
        assert_eq!(map.names(), vec!["x1", "x2"]);
    }

    #[test]
    fn mixed_map_evaluates_in_order() {
        let map = FeatureMap::new(vec![
            PropertyFunction::identity(0, 0.0),
            PropertyFunction::identity(1, 0.0),
            PropertyFunction::product(0, 1, 0.0),
        ])
        .unwrap();
        assert_eq!(
            apply_map(&map, &[3.0, 4.0]).unwrap(),
            vec![3.0, 4.0, 12.0]
        );
    }

    #[test]
    fn radius_is_euclidean_norm() {
        let map = FeatureMap::new(vec![PropertyFunction::radius(0.0)]).unwrap();
        assert_eq!(apply_map(&map, &[3.0, 4.0]).unwrap(), vec![5.0]);
    }

    #[test]
    fn non_finite_output_names_the_function() {
        let map = FeatureMap::new(vec![PropertyFunction::product(0, 1, 0.0)]).unwrap();
        match apply_map(&map, &[1e308, 1e308]) {
            Err(Error::NonFiniteProperty { name }) => assert_eq!(name, "x1*x2"),
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn dimension_shortfall_is_an_error() {
        let map = FeatureMap::identity(2, 0.0);
        assert!(matches!(
            apply_map(&map, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn duplicate_names_rejected() {
        let result = FeatureMap::new(vec![
            PropertyFunction::identity(0, 0.0),
            PropertyFunction::identity(0, 1.0),
        ]);
        assert!(result.is_err());
    }

    #[test]
    fn negative_lambda_rejected() {
        assert!(FeatureMap::new(vec![PropertyFunction::identity(0, -0.5)]).is_err());
    }

    #[test]
    fn parse_constructor_forms() {
        assert_eq!(
            PropertyKind::parse("identity(1)").unwrap(),
            PropertyKind::Identity { index: 0 }
        );
        assert_eq!(
            PropertyKind::parse("product(1, 2)").unwrap(),
            PropertyKind::Product { a: 0, b: 1 }
        );
        assert_eq!(
            PropertyKind::parse("square(2)").unwrap(),
            PropertyKind::Square { index: 1 }
        );
        assert_eq!(PropertyKind::parse("radius()").unwrap(), PropertyKind::Radius);
        assert!(PropertyKind::parse("identity(0)").is_err());
        assert!(PropertyKind::parse("cube(1)").is_err());
        assert!(PropertyKind::parse("radius(1)").is_err());
    }
}
