//! Binary term encoding used for spill runs and the "Bytes used" statistic.
//!
//! A run file is one version byte followed by records. Each record is a
//! little-endian `u32` payload length and the encoded term:
//!
//! ```text
//! term  := coeff u32:nsym (u32:id i32:exp)* u32:nfun fun*
//! coeff := u8:sign bigmag:numerator bigmag:denominator
//! fun   := u32:id u32:argc arg*
//! arg   := 0 u8:sign bigmag | 1 u32:symbol | 2 u32:nterms term*
//! bigmag:= u32:len u8*len          (magnitude, little-endian)
//! ```

use std::io::{self, Read, Write};

use num_bigint::{BigInt, BigUint, Sign};

use crate::coeff::Coefficient;
use crate::error::EngineError;
use crate::term::{Argument, FunctionApp, FunctionId, SymbolId, Term};

pub const RUN_FORMAT_VERSION: u8 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_len(out: &mut Vec<u8>, n: usize) {
    put_u32(out, u32::try_from(n).expect("length fits in u32"));
}

fn put_sign(out: &mut Vec<u8>, s: Sign) {
    out.push(match s {
        Sign::NoSign => 0,
        Sign::Plus => 1,
        Sign::Minus => 2,
    });
}

fn put_mag(out: &mut Vec<u8>, n: &BigInt) {
    let bytes = n.magnitude().to_bytes_le();
    put_len(out, bytes.len());
    out.extend_from_slice(&bytes);
}

pub fn encode_term(t: &Term, out: &mut Vec<u8>) {
    put_sign(out, t.coeff.sign());
    put_mag(out, t.coeff.numer());
    put_mag(out, t.coeff.denom());
    put_len(out, t.symbols.len());
    for &(id, exp) in &t.symbols {
        put_u32(out, id.0);
        out.extend_from_slice(&exp.to_le_bytes());
    }
    put_len(out, t.functions.len());
    for app in &t.functions {
        put_u32(out, app.id.0);
        put_len(out, app.args.len());
        for arg in &app.args {
            match arg {
                Argument::Int(n) => {
                    out.push(0);
                    put_sign(out, n.sign());
                    put_mag(out, n);
                }
                Argument::Symbol(s) => {
                    out.push(1);
                    put_u32(out, s.0);
                }
                Argument::Sum(terms) => {
                    out.push(2);
                    put_len(out, terms.len());
                    for t in terms {
                        encode_term(t, out);
                    }
                }
            }
        }
    }
}

pub fn encoded_len(t: &Term) -> usize {
    let mut buf = Vec::new();
    encode_term(t, &mut buf);
    buf.len()
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], EngineError> {
        if self.buf.len() < n {
            return Err(EngineError::CorruptRecord("truncated term"));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, EngineError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, EngineError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32, EngineError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn sign(&mut self) -> Result<Sign, EngineError> {
        match self.u8()? {
            0 => Ok(Sign::NoSign),
            1 => Ok(Sign::Plus),
            2 => Ok(Sign::Minus),
            _ => Err(EngineError::CorruptRecord("bad sign byte")),
        }
    }

    fn big(&mut self, sign: Sign) -> Result<BigInt, EngineError> {
        let len = self.u32()? as usize;
        let mag = BigUint::from_bytes_le(self.take(len)?);
        Ok(BigInt::from_biguint(sign, mag))
    }

    fn term(&mut self) -> Result<Term, EngineError> {
        let sign = self.sign()?;
        let num = self.big(sign)?;
        let den = self.big(Sign::Plus)?;
        let coeff = Coefficient::new(num, den)?;
        let nsym = self.u32()? as usize;
        let mut symbols = Vec::with_capacity(nsym.min(1024));
        for _ in 0..nsym {
            symbols.push((SymbolId(self.u32()?), self.i32()?));
        }
        let nfun = self.u32()? as usize;
        let mut functions = Vec::with_capacity(nfun.min(1024));
        for _ in 0..nfun {
            let id = FunctionId(self.u32()?);
            let argc = self.u32()? as usize;
            let mut args = Vec::with_capacity(argc.min(1024));
            for _ in 0..argc {
                args.push(match self.u8()? {
                    0 => {
                        let s = self.sign()?;
                        Argument::Int(self.big(s)?)
                    }
                    1 => Argument::Symbol(SymbolId(self.u32()?)),
                    2 => {
                        let n = self.u32()? as usize;
                        let mut terms = Vec::with_capacity(n.min(1024));
                        for _ in 0..n {
                            terms.push(self.term()?);
                        }
                        Argument::Sum(terms)
                    }
                    _ => return Err(EngineError::CorruptRecord("bad argument tag")),
                });
            }
            functions.push(FunctionApp { id, args });
        }
        Ok(Term {
            coeff,
            symbols,
            functions,
        })
    }
}

pub fn decode_term(buf: &[u8]) -> Result<Term, EngineError> {
    let mut cur = Cursor { buf };
    let t = cur.term()?;
    if !cur.buf.is_empty() {
        return Err(EngineError::CorruptRecord("trailing bytes"));
    }
    Ok(t)
}

pub fn write_header(w: &mut impl Write) -> io::Result<()> {
    w.write_all(&[RUN_FORMAT_VERSION])
}

pub fn read_header(r: &mut impl Read) -> Result<(), EngineError> {
    let mut v = [0u8; 1];
    r.read_exact(&mut v)?;
    if v[0] != RUN_FORMAT_VERSION {
        return Err(EngineError::CorruptRecord("unsupported run format version"));
    }
    Ok(())
}

/// Writes one length-prefixed record; returns the number of bytes written.
pub fn write_record(w: &mut impl Write, payload: &[u8]) -> io::Result<usize> {
    let len =
        u32::try_from(payload.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "record too large"))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(payload)?;
    Ok(4 + payload.len())
}

/// Reads the next record, or `None` at a clean end of file.
pub fn read_record(r: &mut impl Read) -> Result<Option<Term>, EngineError> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let mut payload = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut payload)?;
    decode_term(&payload).map(Some)
}
