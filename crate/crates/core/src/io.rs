//! JSON game files and dual-point lists.
//!
//! Game files are UTF-8 JSON with a `kind` tag:
//!
//! ```json
//! {"kind": "bimatrix", "A": [[...]], "B": [[...]]}
//! {"kind": "normal_form", "strategy_counts": [...], "payoffs": [<nested tensor per player>]}
//! {"kind": "graphical", "strategy_counts": [...],
//!  "edges": [{"i": 0, "k": 1, "H_ik": [[...]], "H_ki": [[...]]}]}
//! ```
//!
//! Tensors are nested arrays, outermost axis first; all indices in files
//! are 0-based.

use ndarray::{Array1, Array2, ArrayD, IxDyn};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

use crate::error::{Error, Result};
use crate::game::{AnyGame, BimatrixGame, DualPoint, GraphicalGame, NormalFormGame};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub i: usize,
    pub k: usize,
    #[serde(rename = "H_ik")]
    pub h_ik: Vec<Vec<f64>>,
    #[serde(rename = "H_ki")]
    pub h_ki: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameFile {
    Bimatrix {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
    },
    NormalForm {
        strategy_counts: Vec<usize>,
        payoffs: Vec<Value>,
    },
    Graphical {
        strategy_counts: Vec<usize>,
        edges: Vec<EdgeSpec>,
    },
}

fn matrix_from_rows(rows: &[Vec<f64>], context: &'static str) -> Result<Array2<f64>> {
    if rows.is_empty() {
        return Err(Error::BadGameFile(format!("{context}: empty matrix")));
    }
    let cols = rows[0].len();
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::BadGameFile(format!(
            "{context}: rows must be non-empty and of equal length"
        )));
    }
    let data: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), cols), data)
        .map_err(|e| Error::BadGameFile(format!("{context}: {e}")))
}

fn flatten_tensor(value: &Value, shape: &[usize], out: &mut Vec<f64>) -> Result<()> {
    match shape.split_first() {
        None => match value.as_f64() {
            Some(v) => {
                out.push(v);
                Ok(())
            }
            None => Err(Error::BadGameFile(format!(
                "payoffs: expected a number, found {value}"
            ))),
        },
        Some((&dim, rest)) => {
            let Some(items) = value.as_array() else {
                return Err(Error::BadGameFile(format!(
                    "payoffs: expected an array of length {dim}, found {value}"
                )));
            };
            if items.len() != dim {
                return Err(Error::BadGameFile(format!(
                    "payoffs: expected axis of length {dim}, found {}",
                    items.len()
                )));
            }
            for item in items {
                flatten_tensor(item, rest, out)?;
            }
            Ok(())
        }
    }
}

/// Nested JSON arrays -> dense tensor of the given shape.
pub fn tensor_from_json(value: &Value, shape: &[usize]) -> Result<ArrayD<f64>> {
    let mut data = Vec::with_capacity(shape.iter().product());
    flatten_tensor(value, shape, &mut data)?;
    ArrayD::from_shape_vec(IxDyn(shape), data).map_err(|e| Error::BadGameFile(e.to_string()))
}

/// Dense tensor -> nested JSON arrays (inverse of [`tensor_from_json`]).
pub fn tensor_to_json(tensor: &ArrayD<f64>) -> Value {
    fn build(tensor: &ArrayD<f64>, shape: &[usize], prefix: &mut Vec<usize>) -> Value {
        if prefix.len() == shape.len() {
            return Value::from(tensor[prefix.as_slice()]);
        }
        let axis = prefix.len();
        let items: Vec<Value> = (0..shape[axis])
            .map(|i| {
                prefix.push(i);
                let v = build(tensor, shape, prefix);
                prefix.pop();
                v
            })
            .collect();
        Value::from(items)
    }
    build(tensor, tensor.shape(), &mut Vec::new())
}

impl GameFile {
    pub fn into_game(self) -> Result<AnyGame> {
        match self {
            GameFile::Bimatrix { a, b } => {
                let a = matrix_from_rows(&a, "A")?;
                let b = matrix_from_rows(&b, "B")?;
                Ok(AnyGame::Bimatrix(BimatrixGame::new(a, b)?))
            }
            GameFile::NormalForm {
                strategy_counts,
                payoffs,
            } => {
                if payoffs.len() != strategy_counts.len() {
                    return Err(Error::BadGameFile(format!(
                        "payoffs: expected {} tensors, found {}",
                        strategy_counts.len(),
                        payoffs.len()
                    )));
                }
                let tensors = payoffs
                    .iter()
                    .map(|v| tensor_from_json(v, &strategy_counts))
                    .collect::<Result<Vec<_>>>()?;
                Ok(AnyGame::NormalForm(NormalFormGame::new(
                    strategy_counts,
                    tensors,
                )?))
            }
            GameFile::Graphical {
                strategy_counts,
                edges,
            } => {
                let mut pairs = Vec::new();
                for e in &edges {
                    let h_ik = matrix_from_rows(&e.h_ik, "H_ik")?;
                    let h_ki = matrix_from_rows(&e.h_ki, "H_ki")?;
                    pairs.push(((e.i, e.k), h_ik));
                    pairs.push(((e.k, e.i), h_ki));
                }
                Ok(AnyGame::Graphical(GraphicalGame::new(
                    strategy_counts,
                    pairs,
                )?))
            }
        }
    }

    pub fn from_game(game: &AnyGame) -> GameFile {
        match game {
            AnyGame::Bimatrix(g) => GameFile::Bimatrix {
                a: matrix_rows(g.row_matrix()),
                b: matrix_rows(g.col_matrix()),
            },
            AnyGame::NormalForm(g) => GameFile::NormalForm {
                strategy_counts: g.strategy_counts().to_vec(),
                payoffs: (0..g.num_players())
                    .map(|i| tensor_to_json(g.payoff_tensor(i)))
                    .collect(),
            },
            AnyGame::Graphical(g) => {
                let players = g.num_players();
                let mut edges = Vec::new();
                for i in 0..players {
                    for k in (i + 1)..players {
                        if g.pair_is_zero(i, k) {
                            continue;
                        }
                        edges.push(EdgeSpec {
                            i,
                            k,
                            h_ik: matrix_rows(&g.edge_or_zero(i, k)),
                            h_ki: matrix_rows(&g.edge_or_zero(k, i)),
                        });
                    }
                }
                GameFile::Graphical {
                    strategy_counts: g.strategy_counts().to_vec(),
                    edges,
                }
            }
        }
    }
}

pub fn matrix_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Parse a game from JSON text.
pub fn game_from_str(text: &str) -> Result<AnyGame> {
    let file: GameFile = serde_json::from_str(text)?;
    file.into_game()
}

/// Load a game from a JSON file.
pub fn load_game(path: &Path) -> Result<AnyGame> {
    game_from_str(&std::fs::read_to_string(path)?)
}

/// Parse a list of dual points (`[[[...], [...]], ...]`) checked against
/// the game's strategy counts.
pub fn dual_points_from_str(text: &str, counts: &[usize]) -> Result<Vec<DualPoint>> {
    let raw: Vec<Vec<Vec<f64>>> = serde_json::from_str(text)?;
    raw.into_iter()
        .map(|point| dual_point_from_parts(point, counts))
        .collect()
}

/// Parse a single dual point (`[[...], [...]]`).
pub fn dual_point_from_str(text: &str, counts: &[usize]) -> Result<DualPoint> {
    let raw: Vec<Vec<f64>> = serde_json::from_str(text)?;
    dual_point_from_parts(raw, counts)
}

fn dual_point_from_parts(parts: Vec<Vec<f64>>, counts: &[usize]) -> Result<DualPoint> {
    let shapes: Vec<usize> = parts.iter().map(|p| p.len()).collect();
    if shapes != counts {
        return Err(Error::Shape {
            context: "dual point",
            expected: format!("{counts:?}"),
            actual: format!("{shapes:?}"),
        });
    }
    DualPoint::new(parts.into_iter().map(Array1::from).collect())
}

pub fn load_dual_points(path: &Path, counts: &[usize]) -> Result<Vec<DualPoint>> {
    dual_points_from_str(&std::fs::read_to_string(path)?, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{pairwise_matching_pennies, worked_example};

    #[test]
    fn bimatrix_file_round_trip() {
        let text = r#"{"kind":"bimatrix","A":[[1.0,-1.0],[-1.0,1.0]],"B":[[-1.0,1.0],[1.0,-1.0]]}"#;
        let game = game_from_str(text).unwrap();
        let AnyGame::Bimatrix(ref g) = game else {
            panic!("wrong kind")
        };
        assert_eq!(g.row_matrix()[[0, 0]], 1.0);
        let file = GameFile::from_game(&game);
        let again = file.into_game().unwrap();
        assert_eq!(game, again);
    }

    #[test]
    fn normal_form_file_round_trip() {
        let text = r#"{
            "kind": "normal_form",
            "strategy_counts": [2, 2, 2],
            "payoffs": [
                [[[0,1],[2,3]],[[4,5],[6,7]]],
                [[[0,0],[0,0]],[[1,1],[1,1]]],
                [[[9,8],[7,6]],[[5,4],[3,2]]]
            ]
        }"#;
        let game = game_from_str(text).unwrap();
        let AnyGame::NormalForm(ref g) = game else {
            panic!("wrong kind")
        };
        assert_eq!(g.payoff(0, &[1, 0, 1]), 5.0);
        assert_eq!(g.payoff(2, &[0, 1, 0]), 7.0);
        let again = GameFile::from_game(&game).into_game().unwrap();
        assert_eq!(game, again);
    }

    #[test]
    fn graphical_file_round_trip() {
        let game = AnyGame::Graphical(pairwise_matching_pennies(3));
        let text = serde_json::to_string(&GameFile::from_game(&game)).unwrap();
        let again = game_from_str(&text).unwrap();
        assert_eq!(game, again);
    }

    #[test]
    fn shape_errors_name_the_offending_field() {
        let text = r#"{"kind":"bimatrix","A":[[1.0],[2.0,3.0]],"B":[[1.0],[2.0]]}"#;
        let err = game_from_str(text).unwrap_err();
        assert!(err.to_string().contains("A"));

        let text = r#"{
            "kind": "normal_form",
            "strategy_counts": [2, 2],
            "payoffs": [[[1, 2], [3]], [[1, 2], [3, 4]]]
        }"#;
        let err = game_from_str(text).unwrap_err();
        assert!(err.to_string().contains("payoffs"));
    }

    #[test]
    fn dual_points_are_validated_against_counts() {
        let pts = dual_points_from_str("[[[0.0, 1.0], [2.0, 3.0, 4.0]]]", &[2, 3]).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].part(1)[2], 4.0);
        assert!(dual_points_from_str("[[[0.0], [2.0]]]", &[2, 2]).is_err());
    }

    #[test]
    fn worked_example_serializes_cleanly() {
        let game = AnyGame::Bimatrix(worked_example());
        let text = serde_json::to_string_pretty(&GameFile::from_game(&game)).unwrap();
        assert!(text.contains("\"kind\": \"bimatrix\""));
        assert_eq!(game_from_str(&text).unwrap(), game);
    }
}
