//! Versioned binary model file.
//!
//! Layout (all integers and floats little-endian, floats as IEEE-754 bits so a
//! round trip is exact, `-inf` included):
//!
//! ```text
//! magic   8 bytes  "DMKDEMDL"
//! version u32      1
//! fields, in this exact order, each as
//!   tag  4 ASCII bytes
//!   kind u8   (0 = u64, 1 = f64, 2 = f64 array: u64 length then values)
//!   payload
//! DIMI u64    input dimension d
//! DIME u64    embedding dimension D
//! SIGM f64    kernel bandwidth
//! FAFF u64    1 if the features were adapted, else 0
//! STDZ u64    1 if SHFT/SCAL follow, else 0
//! SHFT f64[d] standardization shift   (only when STDZ = 1)
//! SCAL f64[d] standardization scale   (only when STDZ = 1)
//! WGHT f64[D·d] frequencies, row-major
//! OFFS f64[D] phase offsets
//! NSMP u64    training sample count n
//! DMAT f64[D·D] density matrix, row-major
//! THRS f64    threshold
//! RATE f64    anomaly rate
//! END! u64    0
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};

use crate::dataio::Standardizer;
use crate::density::DensityMatrix;
use crate::detector::DetectorModel;
use crate::embedding::EmbeddingParams;
use crate::error::{DmkdeError, Result};

pub const MAGIC: &[u8; 8] = b"DMKDEMDL";
pub const FORMAT_VERSION: u32 = 1;

const KIND_U64: u8 = 0;
const KIND_F64: u8 = 1;
const KIND_ARRAY: u8 = 2;

struct FieldWriter<W: Write> {
    out: W,
}

impl<W: Write> FieldWriter<W> {
    fn header(&mut self, tag: &[u8; 4], kind: u8) -> std::io::Result<()> {
        self.out.write_all(tag)?;
        self.out.write_u8(kind)
    }

    fn u64(&mut self, tag: &[u8; 4], v: u64) -> std::io::Result<()> {
        self.header(tag, KIND_U64)?;
        self.out.write_u64::<LittleEndian>(v)
    }

    fn f64(&mut self, tag: &[u8; 4], v: f64) -> std::io::Result<()> {
        self.header(tag, KIND_F64)?;
        self.out.write_u64::<LittleEndian>(v.to_bits())
    }

    fn array<'a>(
        &mut self,
        tag: &[u8; 4],
        len: usize,
        values: impl Iterator<Item = &'a f64>,
    ) -> std::io::Result<()> {
        self.header(tag, KIND_ARRAY)?;
        self.out.write_u64::<LittleEndian>(len as u64)?;
        let mut written = 0;
        for v in values {
            self.out.write_u64::<LittleEndian>(v.to_bits())?;
            written += 1;
        }
        debug_assert_eq!(written, len);
        Ok(())
    }
}

/// Serialize `model` in the canonical layout.
pub fn write_model<W: Write>(model: &DetectorModel, out: W) -> std::io::Result<()> {
    let mut w = FieldWriter { out };
    let emb = model.embedding();
    let d = emb.input_dim();
    let big_d = emb.embed_dim();
    w.out.write_all(MAGIC)?;
    w.out.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    w.u64(b"DIMI", d as u64)?;
    w.u64(b"DIME", big_d as u64)?;
    w.f64(b"SIGM", emb.sigma())?;
    w.u64(b"FAFF", u64::from(model.use_aff()))?;
    match model.standardizer() {
        Some(s) => {
            w.u64(b"STDZ", 1)?;
            w.array(b"SHFT", d, s.shift().iter())?;
            w.array(b"SCAL", d, s.scale().iter())?;
        }
        None => w.u64(b"STDZ", 0)?,
    }
    w.array(b"WGHT", big_d * d, emb.weights().iter())?;
    w.array(b"OFFS", big_d, emb.offsets().iter())?;
    w.u64(b"NSMP", model.density().sample_count() as u64)?;
    w.array(b"DMAT", big_d * big_d, model.density().matrix().iter())?;
    w.f64(b"THRS", model.threshold())?;
    w.f64(b"RATE", model.anomaly_rate())?;
    w.u64(b"END!", 0)?;
    w.out.flush()
}

struct FieldReader<R: Read> {
    input: R,
}

fn fmt_err(msg: impl Into<String>) -> DmkdeError {
    DmkdeError::ModelFormat(msg.into())
}

impl<R: Read> FieldReader<R> {
    fn io<T>(r: std::io::Result<T>) -> Result<T> {
        r.map_err(|e| fmt_err(format!("truncated or unreadable model: {e}")))
    }

    fn expect(&mut self, tag: &[u8; 4], kind: u8) -> Result<()> {
        let mut found = [0u8; 4];
        Self::io(self.input.read_exact(&mut found))?;
        if &found != tag {
            return Err(fmt_err(format!(
                "expected field {}, found {}",
                String::from_utf8_lossy(tag),
                String::from_utf8_lossy(&found)
            )));
        }
        let k = Self::io(self.input.read_u8())?;
        if k != kind {
            return Err(fmt_err(format!(
                "field {} has kind {k}, expected {kind}",
                String::from_utf8_lossy(tag)
            )));
        }
        Ok(())
    }

    fn u64(&mut self, tag: &[u8; 4]) -> Result<u64> {
        self.expect(tag, KIND_U64)?;
        Self::io(self.input.read_u64::<LittleEndian>())
    }

    fn usize(&mut self, tag: &[u8; 4]) -> Result<usize> {
        usize::try_from(self.u64(tag)?).map_err(|_| fmt_err("size does not fit in memory"))
    }

    fn f64(&mut self, tag: &[u8; 4]) -> Result<f64> {
        self.expect(tag, KIND_F64)?;
        Ok(f64::from_bits(Self::io(
            self.input.read_u64::<LittleEndian>(),
        )?))
    }

    fn array(&mut self, tag: &[u8; 4], expected_len: usize) -> Result<Vec<f64>> {
        self.expect(tag, KIND_ARRAY)?;
        let len = Self::io(self.input.read_u64::<LittleEndian>())?;
        if len != expected_len as u64 {
            return Err(fmt_err(format!(
                "field {} has {len} values, expected {expected_len}",
                String::from_utf8_lossy(tag)
            )));
        }
        let mut bits = vec![0u64; expected_len];
        Self::io(self.input.read_u64_into::<LittleEndian>(&mut bits))?;
        Ok(bits.into_iter().map(f64::from_bits).collect())
    }
}

pub fn read_model<R: Read>(input: R) -> Result<DetectorModel> {
    let mut r = FieldReader { input };
    let mut magic = [0u8; 8];
    FieldReader::<R>::io(r.input.read_exact(&mut magic))?;
    if &magic != MAGIC {
        return Err(fmt_err("not a model file (bad magic)"));
    }
    let version = FieldReader::<R>::io(r.input.read_u32::<LittleEndian>())?;
    if version != FORMAT_VERSION {
        return Err(fmt_err(format!(
            "unsupported model format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let d = r.usize(b"DIMI")?;
    let big_d = r.usize(b"DIME")?;
    if d == 0 || big_d == 0 {
        return Err(fmt_err("dimensions must be positive"));
    }
    let sigma = r.f64(b"SIGM")?;
    let use_aff = match r.u64(b"FAFF")? {
        0 => false,
        1 => true,
        v => return Err(fmt_err(format!("FAFF must be 0 or 1, found {v}"))),
    };
    let standardizer = match r.u64(b"STDZ")? {
        0 => None,
        1 => {
            let shift = Array1::from(r.array(b"SHFT", d)?);
            let scale = Array1::from(r.array(b"SCAL", d)?);
            Some(Standardizer::from_parts(shift, scale)?)
        }
        v => return Err(fmt_err(format!("STDZ must be 0 or 1, found {v}"))),
    };
    let dd = big_d
        .checked_mul(d)
        .ok_or_else(|| fmt_err("weight matrix size overflows"))?;
    let weights = Array2::from_shape_vec((big_d, d), r.array(b"WGHT", dd)?)
        .map_err(|e| fmt_err(e.to_string()))?;
    let offsets = Array1::from(r.array(b"OFFS", big_d)?);
    let embedding = EmbeddingParams::from_parts(weights, offsets, sigma)?;
    let n = r.usize(b"NSMP")?;
    let big_dd = big_d
        .checked_mul(big_d)
        .ok_or_else(|| fmt_err("density matrix size overflows"))?;
    let matrix = Array2::from_shape_vec((big_d, big_d), r.array(b"DMAT", big_dd)?)
        .map_err(|e| fmt_err(e.to_string()))?;
    let density = DensityMatrix::from_parts(matrix, n)?;
    let threshold = r.f64(b"THRS")?;
    let rate = r.f64(b"RATE")?;
    if r.u64(b"END!")? != 0 {
        return Err(fmt_err("bad terminator"));
    }
    let mut trailing = [0u8; 1];
    if FieldReader::<R>::io(r.input.read(&mut trailing))? != 0 {
        return Err(fmt_err("trailing bytes after terminator"));
    }
    DetectorModel::from_parts(embedding, density, threshold, rate, standardizer, use_aff)
}

pub fn save_model(model: &DetectorModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| DmkdeError::io(path, e))?;
    write_model(model, BufWriter::new(file)).map_err(|e| DmkdeError::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<DetectorModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| DmkdeError::io(path, e))?;
    read_model(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{fit, FitConfig};
    use crate::rng::SeededStream;

    fn small_model(standardize: bool, rate: f64) -> DetectorModel {
        let mut rng = SeededStream::new(2, 0);
        let x = Array2::from_shape_simple_fn((40, 3), || rng.standard_normal());
        let cfg = FitConfig {
            embed_dim: 12,
            standardize,
            ..FitConfig::default()
        };
        fit(x.view(), x.view(), rate, &cfg).unwrap()
    }

    fn round_trip(model: &DetectorModel) -> DetectorModel {
        let mut bytes = Vec::new();
        write_model(model, &mut bytes).unwrap();
        read_model(bytes.as_slice()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        for (standardize, rate) in [(true, 0.1), (false, 0.0), (true, 1.0)] {
            let model = small_model(standardize, rate);
            assert_eq!(round_trip(&model), model);
        }
    }

    #[test]
    fn encoding_is_stable() {
        let model = small_model(true, 0.1);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_model(&model, &mut a).unwrap();
        write_model(&round_trip(&model), &mut b).unwrap();
        assert_eq!(a, b);
        assert_eq!(&a[..8], MAGIC);
    }

    #[test]
    fn rejects_corruption() {
        let model = small_model(false, 0.1);
        let mut bytes = Vec::new();
        write_model(&model, &mut bytes).unwrap();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            read_model(bad_magic.as_slice()),
            Err(DmkdeError::ModelFormat(_))
        ));

        let mut bad_version = bytes.clone();
        bad_version[8] = 9;
        assert!(matches!(
            read_model(bad_version.as_slice()),
            Err(DmkdeError::ModelFormat(_))
        ));

        let truncated = &bytes[..bytes.len() - 5];
        assert!(matches!(
            read_model(truncated),
            Err(DmkdeError::ModelFormat(_))
        ));

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(matches!(
            read_model(trailing.as_slice()),
            Err(DmkdeError::ModelFormat(_))
        ));
    }
}
