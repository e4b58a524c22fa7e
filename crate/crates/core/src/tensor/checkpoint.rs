//! Plain-text parameter checkpoints.
//!
//! ```text
//! milseq-params 1
//! <name>\t<dim>,<dim>,...\t<value> <value> ...
//! ```
//!
//! One line per array, in name order. Values are written in the shortest
//! decimal form that parses back to the identical `f64`, so a write/read
//! cycle is bit-exact. Names may not contain whitespace.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{DenseArray, ParamSet};

const MAGIC: &str = "milseq-params 1";

pub fn write<T: Scalar, W: Write>(params: &ParamSet<T>, mut out: W) -> Result<()> {
    writeln!(out, "{}", MAGIC)?;
    for (name, value) in params.iter() {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::format("checkpoint", format!("invalid parameter name {:?}", name)));
        }
        let dims: Vec<String> = value.shape().iter().map(usize::to_string).collect();
        let values: Vec<String> = value.data().iter().map(|v| format!("{:?}", v.as_f64())).collect();
        writeln!(out, "{}\t{}\t{}", name, dims.join(","), values.join(" "))?;
    }
    Ok(())
}

pub fn read<T: Scalar, R: BufRead>(input: R) -> Result<ParamSet<T>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim_end) != Some(MAGIC) {
        return Err(Error::format("checkpoint", "missing header"));
    }
    let mut params = ParamSet::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::format("checkpoint", format!("line {}: {}", lineno + 2, what));
        let mut fields = line.split('\t');
        let (Some(name), Some(dims), Some(values), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(bad("expected three tab-separated fields"));
        };
        let shape = if dims.is_empty() {
            Vec::new()
        } else {
            dims.split(',')
                .map(|d| d.parse::<usize>().map_err(|_| bad("bad dimension")))
                .collect::<Result<Vec<_>>>()?
        };
        let data = values
            .split_whitespace()
            .map(|v| v.parse::<f64>().map(T::lit).map_err(|_| bad("bad value")))
            .collect::<Result<Vec<_>>>()?;
        let array = DenseArray::new(shape, data).map_err(|_| bad("shape does not match value count"))?;
        params.insert(name, array);
    }
    Ok(params)
}

pub fn save<T: Scalar>(params: &ParamSet<T>, path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write(params, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load<T: Scalar>(path: &std::path::Path) -> Result<ParamSet<T>> {
    let file = std::fs::File::open(path)?;
    read(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn write_read_is_bit_exact(values in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..40)) {
            let mut params = ParamSet::new();
            let n = values.len();
            params.insert("w", DenseArray::matrix(1, n, values).unwrap());
            params.insert("b", DenseArray::scalar(-0.0));
            let mut buf = Vec::new();
            write(&params, &mut buf).unwrap();
            let back: ParamSet<f64> = read(buf.as_slice()).unwrap();
            prop_assert_eq!(back.get("w").unwrap().data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            params.get("w").unwrap().data().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            prop_assert_eq!(back.get("b").unwrap().shape(), &[] as &[usize]);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read::<f64, _>("nope\n".as_bytes()).is_err());
        assert!(read::<f64, _>("milseq-params 1\nw\t2,2\t1 2 3\n".as_bytes()).is_err());
        let mut params = ParamSet::<f64>::new();
        params.insert("has space", DenseArray::scalar(1.0));
        assert!(write(&params, Vec::new()).is_err());
    }
}
