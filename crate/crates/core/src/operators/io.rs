//! Dense JSON and coordinate-triplet CSV forms of operators.

use serde::{Deserialize, Serialize};

use super::{BandOperator, Coupling, OperatorError, C64};

/// `{ "dim": n, "re": [...], "im"?: [...], "coupling"?: ... }`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseOperatorDoc {
    pub dim: usize,
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
    #[serde(default)]
    pub coupling: Coupling,
}

/// One CSV row `row,col,re,im`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
}

impl BandOperator {
    pub fn to_doc(&self) -> DenseOperatorDoc {
        let n = self.dim();
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                let v = self.get(x, y);
                re.push(v.re);
                im.push(v.im);
            }
        }
        DenseOperatorDoc {
            dim: n,
            re,
            im: (!self.is_real()).then_some(im),
            coupling: self.coupling(),
        }
    }

    pub fn from_doc(doc: &DenseOperatorDoc) -> Result<Self, OperatorError> {
        let n = doc.dim;
        if doc.re.len() != n * n {
            return Err(OperatorError::Malformed(format!(
                "expected {} real parts, found {}",
                n * n,
                doc.re.len()
            )));
        }
        if let Some(im) = &doc.im {
            if im.len() != n * n {
                return Err(OperatorError::Malformed(format!(
                    "expected {} imaginary parts, found {}",
                    n * n,
                    im.len()
                )));
            }
        }
        let op = BandOperator::from_fn(n, |x, y| {
            let k = x * n + y;
            C64::new(doc.re[k], doc.im.as_ref().map_or(0.0, |im| im[k]))
        });
        let op = BandOperator::from_matrix(op.into_matrix())?;
        Ok(match doc.coupling {
            Coupling::Cross => op.as_cross(),
            Coupling::SameCopy => op,
        })
    }

    pub fn write_triplets<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (row, col, v) in self.nonzeros() {
            w.serialize(Triplet {
                row,
                col,
                re: v.re,
                im: v.im,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_triplets<R: std::io::Read>(dim: usize, input: R) -> Result<Self, OperatorError> {
        let mut op = BandOperator::zeros(dim);
        let mut r = csv::Reader::from_reader(input);
        for record in r.deserialize::<Triplet>() {
            let t = record.map_err(|e| OperatorError::Malformed(e.to_string()))?;
            if t.row >= dim || t.col >= dim {
                return Err(OperatorError::Malformed(format!(
                    "entry ({}, {}) outside a {dim}x{dim} operator",
                    t.row, t.col
                )));
            }
            op.set(t.row, t.col, C64::new(t.re, t.im));
        }
        BandOperator::from_matrix(op.into_matrix())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_triplet_forms_agree() {
        let mut a = BandOperator::zeros(3);
        a.set(0, 2, C64::new(1.5, -2.0));
        a.set(1, 1, C64::new(-4.0, 0.0));
        let doc = a.to_doc();
        let json = serde_json::to_string(&doc).unwrap();
        let back = BandOperator::from_doc(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, a);

        let mut buf = Vec::new();
        a.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("row,col,re,im"));
        assert_eq!(BandOperator::read_triplets(3, buf.as_slice()).unwrap(), a);
    }

    #[test]
    fn malformed_inputs() {
        let doc = DenseOperatorDoc {
            dim: 2,
            re: vec![1.0],
            im: None,
            coupling: Coupling::SameCopy,
        };
        assert!(BandOperator::from_doc(&doc).is_err());
        let csv = "row,col,re,im\n5,0,1,0\n";
        assert!(BandOperator::read_triplets(2, csv.as_bytes()).is_err());
    }
}
