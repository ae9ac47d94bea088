//! NPY array files: header grammar, little-endian writers and a reader that
//! accepts the common numeric dtypes in either byte order.

use std::io::{Read, Write};

use super::ContainerError;

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
/// Header blocks are padded so the data starts on a 64-byte boundary.
const ALIGN: usize = 64;
const GROWTH_AXIS_MAX_DIGITS: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F64,
    F32,
    I64,
    I32,
    I16,
    U16,
    U8,
    /// Fixed-width UCS-4 string of the given length in characters.
    Unicode(usize),
}

impl Dtype {
    fn item_size(self) -> usize {
        match self {
            Dtype::F64 | Dtype::I64 => 8,
            Dtype::F32 | Dtype::I32 => 4,
            Dtype::I16 | Dtype::U16 => 2,
            Dtype::U8 => 1,
            Dtype::Unicode(n) => 4 * n,
        }
    }

    /// Little-endian descriptor string.
    pub fn descr(self) -> String {
        match self {
            Dtype::F64 => "<f8".into(),
            Dtype::F32 => "<f4".into(),
            Dtype::I64 => "<i8".into(),
            Dtype::I32 => "<i4".into(),
            Dtype::I16 => "<i2".into(),
            Dtype::U16 => "<u2".into(),
            Dtype::U8 => "|u1".into(),
            Dtype::Unicode(n) => format!("<U{n}"),
        }
    }

    /// Parses a descriptor, returning the dtype and whether it is big-endian.
    fn parse(descr: &str) -> Result<(Self, bool), ContainerError> {
        let bad = || ContainerError::BadHeader(format!("unsupported dtype {descr:?}"));
        let mut chars = descr.chars();
        let order = chars.next().ok_or_else(bad)?;
        let big = match order {
            '<' | '|' | '=' => false,
            '>' => true,
            _ => return Err(bad()),
        };
        let rest = chars.as_str();
        let dtype = match rest {
            "f8" => Dtype::F64,
            "f4" => Dtype::F32,
            "i8" => Dtype::I64,
            "i4" => Dtype::I32,
            "i2" => Dtype::I16,
            "u2" => Dtype::U16,
            "u1" | "b1" => Dtype::U8,
            s if s.starts_with('U') => Dtype::Unicode(s[1..].parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        Ok((dtype, big))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub dtype: Dtype,
    pub big_endian: bool,
    pub fortran_order: bool,
    pub shape: Vec<usize>,
}

impl Header {
    pub fn new(dtype: Dtype, shape: Vec<usize>) -> Self {
        Self {
            dtype,
            big_endian: false,
            fortran_order: false,
            shape,
        }
    }

    pub fn element_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// The header dict literal, without padding.
    pub fn dict(&self) -> String {
        let shape = match self.shape.as_slice() {
            [] => "()".to_string(),
            [n] => format!("({n},)"),
            dims => format!(
                "({})",
                dims.iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        };
        format!(
            "{{'descr': '{}', 'fortran_order': {}, 'shape': {}, }}",
            self.dtype.descr(),
            if self.fortran_order { "True" } else { "False" },
            shape
        )
    }

    /// Full preamble: magic, version 1.0, length and the padded dict, laid
    /// out byte-for-byte as `numpy.save` does, including the spare spaces
    /// it reserves for growing the leading axis.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut dict = self.dict();
        let growth_axis = if self.fortran_order { self.shape.last() } else { self.shape.first() };
        if let Some(d) = growth_axis {
            let digits = d.to_string().len();
            dict.extend(std::iter::repeat(' ').take(GROWTH_AXIS_MAX_DIGITS.saturating_sub(digits)));
        }
        let hlen = dict.len() + 1;
        let padlen = ALIGN - (10 + hlen) % ALIGN;
        let mut out = Vec::with_capacity(10 + hlen + padlen);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&[1, 0]);
        out.extend_from_slice(&((hlen + padlen) as u16).to_le_bytes());
        out.extend_from_slice(dict.as_bytes());
        out.resize(out.len() + padlen, b' ');
        out.push(b'\n');
        out
    }
}

/// Typed array payload in C order.
#[derive(Debug, Clone, PartialEq)]
pub enum Data {
    F64(Vec<f64>),
    F32(Vec<f32>),
    I64(Vec<i64>),
    U8(Vec<u8>),
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Array {
    pub shape: Vec<usize>,
    pub data: Data,
}

impl Array {
    pub fn f64(shape: Vec<usize>, data: Vec<f64>) -> Self {
        Self {
            shape,
            data: Data::F64(data),
        }
    }

    pub fn f32(shape: Vec<usize>, data: Vec<f32>) -> Self {
        Self {
            shape,
            data: Data::F32(data),
        }
    }

    /// 0-d unicode array, as `numpy.array("...")` produces.
    pub fn string(s: &str) -> Self {
        Self {
            shape: vec![],
            data: Data::Str(s.to_string()),
        }
    }

    pub fn into_f64(self) -> Option<Vec<f64>> {
        match self.data {
            Data::F64(v) => Some(v),
            Data::F32(v) => Some(v.into_iter().map(f64::from).collect()),
            Data::I64(v) => Some(v.into_iter().map(|x| x as f64).collect()),
            Data::U8(v) => Some(v.into_iter().map(f64::from).collect()),
            Data::Str(_) => None,
        }
    }

    pub fn into_f32(self) -> Option<Vec<f32>> {
        match self.data {
            Data::F32(v) => Some(v),
            Data::F64(v) => Some(v.into_iter().map(|x| x as f32).collect()),
            _ => None,
        }
    }

    pub fn into_string(self) -> Option<String> {
        match self.data {
            Data::Str(s) => Some(s),
            _ => None,
        }
    }

    fn header(&self) -> Header {
        let dtype = match &self.data {
            Data::F64(_) => Dtype::F64,
            Data::F32(_) => Dtype::F32,
            Data::I64(_) => Dtype::I64,
            Data::U8(_) => Dtype::U8,
            Data::Str(s) => Dtype::Unicode(s.chars().count().max(1)),
        };
        Header::new(dtype, self.shape.clone())
    }
}

pub fn write<W: Write>(mut w: W, array: &Array) -> Result<(), ContainerError> {
    let header = array.header();
    let expected = header.element_count();
    let found = match &array.data {
        Data::F64(v) => v.len(),
        Data::F32(v) => v.len(),
        Data::I64(v) => v.len(),
        Data::U8(v) => v.len(),
        Data::Str(_) => 1,
    };
    if expected != found {
        return Err(ContainerError::BadShape {
            name: "npy".into(),
            shape: array.shape.clone(),
            expected: format!("{found} elements"),
        });
    }
    w.write_all(&header.to_bytes())?;
    let mut buf = Vec::with_capacity(expected * header.dtype.item_size());
    match &array.data {
        Data::F64(v) => v.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
        Data::F32(v) => v.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
        Data::I64(v) => v.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
        Data::U8(v) => buf.extend_from_slice(v),
        Data::Str(s) => {
            let Dtype::Unicode(n) = header.dtype else {
                unreachable!()
            };
            for c in s.chars() {
                buf.extend_from_slice(&(c as u32).to_le_bytes());
            }
            buf.resize(4 * n, 0);
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Splits an NPY byte buffer into its header and the offset of the payload.
pub fn parse_preamble(bytes: &[u8]) -> Result<(Header, usize), ContainerError> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(ContainerError::BadHeader("missing NPY magic".into()));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    let (len, start) = match major {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 => {
            if bytes.len() < 12 {
                return Err(ContainerError::BadHeader("truncated header length".into()));
            }
            let n = u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]);
            (n as usize, 12)
        }
        _ => {
            return Err(ContainerError::BadHeader(format!(
                "unsupported NPY version {major}.{minor}"
            )))
        }
    };
    let end = start + len;
    let text = bytes
        .get(start..end)
        .ok_or_else(|| ContainerError::BadHeader("truncated header".into()))?;
    let text = std::str::from_utf8(text)
        .map_err(|_| ContainerError::BadHeader("header is not text".into()))?;
    Ok((parse_dict(text)?, end))
}

pub fn read<R: Read>(mut r: R) -> Result<Array, ContainerError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}

pub fn from_bytes(bytes: &[u8]) -> Result<Array, ContainerError> {
    let (header, offset) = parse_preamble(bytes)?;
    let count = header.element_count();
    let size = header.dtype.item_size();
    let payload = bytes
        .get(offset..offset + count * size)
        .ok_or_else(|| ContainerError::BadHeader("payload shorter than shape".into()))?;
    let big = header.big_endian;
    macro_rules! decode {
        ($t:ty, $n:expr) => {
            payload
                .chunks_exact($n)
                .map(|c| {
                    let arr: [u8; $n] = c.try_into().unwrap();
                    if big {
                        <$t>::from_be_bytes(arr)
                    } else {
                        <$t>::from_le_bytes(arr)
                    }
                })
                .collect::<Vec<$t>>()
        };
    }
    let data = match header.dtype {
        Dtype::F64 => Data::F64(decode!(f64, 8)),
        Dtype::F32 => Data::F32(decode!(f32, 4)),
        Dtype::I64 => Data::I64(decode!(i64, 8)),
        Dtype::I32 => Data::I64(decode!(i32, 4).into_iter().map(i64::from).collect()),
        Dtype::I16 => Data::I64(decode!(i16, 2).into_iter().map(i64::from).collect()),
        Dtype::U16 => Data::I64(decode!(u16, 2).into_iter().map(i64::from).collect()),
        Dtype::U8 => Data::U8(payload.to_vec()),
        Dtype::Unicode(_) => {
            if count != 1 {
                return Err(ContainerError::BadHeader(
                    "only scalar string arrays are supported".into(),
                ));
            }
            let s: String = decode!(u32, 4)
                .into_iter()
                .take_while(|&c| c != 0)
                .map(|c| char::from_u32(c).unwrap_or(char::REPLACEMENT_CHARACTER))
                .collect();
            Data::Str(s)
        }
    };
    let mut array = Array {
        shape: header.shape.clone(),
        data,
    };
    if header.fortran_order && array.shape.len() > 1 {
        array = to_c_order(array);
    }
    Ok(array)
}

fn to_c_order(a: Array) -> Array {
    let shape = a.shape.clone();
    let n = shape.len();
    // Fortran strides, in elements.
    let mut f_strides = vec![1usize; n];
    for i in 1..n {
        f_strides[i] = f_strides[i - 1] * shape[i - 1];
    }
    let count: usize = shape.iter().product();
    let perm: Vec<usize> = (0..count)
        .map(|mut c| {
            let mut off = 0;
            for axis in (0..n).rev() {
                off += (c % shape[axis]) * f_strides[axis];
                c /= shape[axis];
            }
            off
        })
        .collect();
    fn gather<T: Copy>(v: &[T], perm: &[usize]) -> Vec<T> {
        perm.iter().map(|&i| v[i]).collect()
    }
    let data = match a.data {
        Data::F64(v) => Data::F64(gather(&v, &perm)),
        Data::F32(v) => Data::F32(gather(&v, &perm)),
        Data::I64(v) => Data::I64(gather(&v, &perm)),
        Data::U8(v) => Data::U8(gather(&v, &perm)),
        s @ Data::Str(_) => s,
    };
    Array { shape, data }
}

/// Parses the Python dict literal of an NPY header.
pub fn parse_dict(text: &str) -> Result<Header, ContainerError> {
    let mut p = DictParser {
        s: text.as_bytes(),
        i: 0,
    };
    let mut descr = None;
    let mut fortran = None;
    let mut shape = None;
    p.expect(b'{')?;
    loop {
        p.skip_ws();
        if p.eat(b'}') {
            break;
        }
        let key = p.string()?;
        p.expect(b':')?;
        match key.as_str() {
            "descr" => descr = Some(p.string()?),
            "fortran_order" => fortran = Some(p.boolean()?),
            "shape" => shape = Some(p.tuple()?),
            other => return Err(p.err(&format!("unexpected key {other:?}"))),
        }
        p.skip_ws();
        if !p.eat(b',') {
            p.expect(b'}')?;
            break;
        }
    }
    p.skip_ws();
    if p.i != p.s.len() {
        return Err(p.err("trailing characters"));
    }
    let descr = descr.ok_or_else(|| p.err("missing 'descr'"))?;
    let (dtype, big_endian) = Dtype::parse(&descr)?;
    Ok(Header {
        dtype,
        big_endian,
        fortran_order: fortran.ok_or_else(|| p.err("missing 'fortran_order'"))?,
        shape: shape.ok_or_else(|| p.err("missing 'shape'"))?,
    })
}

struct DictParser<'a> {
    s: &'a [u8],
    i: usize,
}

impl DictParser<'_> {
    fn err(&self, msg: &str) -> ContainerError {
        ContainerError::BadHeader(format!("{msg} at byte {}", self.i))
    }

    fn skip_ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.s.get(self.i) == Some(&c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ContainerError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected {:?}", c as char)))
        }
    }

    fn string(&mut self) -> Result<String, ContainerError> {
        self.skip_ws();
        let quote = match self.s.get(self.i) {
            Some(&q @ (b'\'' | b'"')) => q,
            _ => return Err(self.err("expected string")),
        };
        self.i += 1;
        let start = self.i;
        while self.i < self.s.len() && self.s[self.i] != quote {
            self.i += 1;
        }
        if self.i == self.s.len() {
            return Err(self.err("unterminated string"));
        }
        let out = String::from_utf8_lossy(&self.s[start..self.i]).into_owned();
        self.i += 1;
        Ok(out)
    }

    fn boolean(&mut self) -> Result<bool, ContainerError> {
        self.skip_ws();
        let rest = &self.s[self.i..];
        if rest.starts_with(b"True") {
            self.i += 4;
            Ok(true)
        } else if rest.starts_with(b"False") {
            self.i += 5;
            Ok(false)
        } else {
            Err(self.err("expected True or False"))
        }
    }

    fn tuple(&mut self) -> Result<Vec<usize>, ContainerError> {
        self.expect(b'(')?;
        let mut dims = Vec::new();
        loop {
            if self.eat(b')') {
                return Ok(dims);
            }
            self.skip_ws();
            let start = self.i;
            while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                self.i += 1;
            }
            if start == self.i {
                return Err(self.err("expected integer"));
            }
            let text = std::str::from_utf8(&self.s[start..self.i]).unwrap();
            dims.push(text.parse().map_err(|_| self.err("dimension overflow"))?);
            // Trailing L from Python 2 writers.
            if self.s.get(self.i) == Some(&b'L') {
                self.i += 1;
            }
            if !self.eat(b',') {
                self.expect(b')')?;
                return Ok(dims);
            }
        }
    }
}
