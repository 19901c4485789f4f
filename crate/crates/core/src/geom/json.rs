use super::{point2, ConvexPolytope, Dim, GeomError, Point};
use serde::{Deserialize, Serialize};

/// Wire format `{"dim": 2|3, "vertices": [[x, y(, z)], ...], "faces": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolytopeJson {
    pub dim: Dim,
    pub vertices: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faces: Vec<Vec<usize>>,
}

impl From<&ConvexPolytope> for PolytopeJson {
    fn from(c: &ConvexPolytope) -> Self {
        let d = c.dim().get();
        PolytopeJson {
            dim: c.dim(),
            vertices: c
                .vertices()
                .iter()
                .map(|v| v.as_slice()[..d].to_vec())
                .collect(),
            faces: c.faces().to_vec(),
        }
    }
}

impl TryFrom<PolytopeJson> for ConvexPolytope {
    type Error = GeomError;

    fn try_from(p: PolytopeJson) -> Result<Self, GeomError> {
        let d = p.dim.get();
        if let Some(bad) = p.vertices.iter().position(|v| v.len() != d) {
            return Err(GeomError::InvalidPolytope(format!(
                "vertex {bad} does not have {d} coordinates"
            )));
        }
        if p.vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(GeomError::InvalidPolytope("non-finite coordinate".into()));
        }
        match p.dim {
            Dim::Two => {
                ConvexPolytope::polygon(p.vertices.iter().map(|v| point2(v[0], v[1])).collect())
            }
            Dim::Three => ConvexPolytope::polyhedron(
                p.vertices
                    .iter()
                    .map(|v| Point::new(v[0], v[1], v[2]))
                    .collect(),
                p.faces,
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for c in [ConvexPolytope::unit_square(), ConvexPolytope::unit_cube()] {
            let text = serde_json::to_string(&PolytopeJson::from(&c)).unwrap();
            let back: PolytopeJson = serde_json::from_str(&text).unwrap();
            assert_eq!(ConvexPolytope::try_from(back).unwrap(), c);
        }
    }

    #[test]
    fn planar_has_no_faces_key() {
        let text =
            serde_json::to_string(&PolytopeJson::from(&ConvexPolytope::unit_square())).unwrap();
        assert_eq!(
            text,
            r#"{"dim":2,"vertices":[[0.0,0.0],[1.0,0.0],[1.0,1.0],[0.0,1.0]]}"#
        );
    }

    #[test]
    fn wrong_arity_rejected() {
        let p: PolytopeJson =
            serde_json::from_str(r#"{"dim":3,"vertices":[[0,0],[1,0],[0,1]]}"#).unwrap();
        assert!(ConvexPolytope::try_from(p).is_err());
    }
}
