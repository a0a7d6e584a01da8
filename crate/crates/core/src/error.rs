use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{0} is even; an odd prime is required")]
    EvenInput(u64),
    #[error("{0} is too large; primes below 2^31 are supported")]
    PrimeTooLarge(u64),
    #[error("order {order} does not divide p - 1 = {group_order}")]
    OrderDoesNotDivide { order: u64, group_order: u64 },
    #[error("{0} is not a nonzero quadratic residue")]
    NotAResidue(u32),
    #[error("polynomials belong to different rings (p = {left_p}, len {left_len} vs p = {right_p}, len {right_len})")]
    ContextMismatch {
        left_p: u32,
        left_len: usize,
        right_p: u32,
        right_len: usize,
    },
    #[error("expected {expected} parts, got {got}")]
    WrongPartCount { expected: usize, got: usize },
    #[error("part {index} has degree {degree}, above the allowed {max}")]
    DegreeTooLarge {
        index: usize,
        degree: usize,
        max: usize,
    },
    #[error("gluing equal polynomials cancels the top half; ruled out by the degree lower bound")]
    EqualInputsCancellation,
    #[error("level {level} out of range (max {max})")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("polynomial does not compute square roots on the quadratic residues")]
    NotASqrtPoly,
    #[error("no canonical half-root branch for even subgroup order {0}")]
    UnresolvedHalfRoot(usize),
    #[error("period {period} does not divide {modulus}")]
    PeriodDoesNotDivide { period: usize, modulus: usize },
    #[error("gcd({ell}, p - 1) = {gcd} != 1; use the brute-force counter")]
    NotCoprime { ell: i64, gcd: u64 },
    #[error("exponent {0} must be odd")]
    EvenExponent(i64),
    #[error("{what} = {value} exceeds the cap {cap}")]
    TooLarge {
        what: &'static str,
        value: u64,
        cap: u64,
    },
    #[error("range {start}..{end} is outside 0..{len}")]
    RangeOutOfBounds { start: u64, end: u64, len: u64 },
    #[error("block {block} out of range (there are {count} blocks)")]
    BlockOutOfRange { block: usize, count: usize },
    #[error("invalid divisor {d} of r = {r} (need d | r with r/d odd)")]
    InvalidDivisor { d: usize, r: usize },
    #[error("p = {p} is {residue} mod 4, which this operation does not handle")]
    WrongResidue { p: u32, residue: u32 },
    #[error("two family members coincide; the one-level gluing would cancel completely")]
    CancellationImpossible,
    #[error("shard {index}/{total} is invalid")]
    InvalidShard { index: u64, total: u64 },
    #[error("cannot merge histograms: {0}")]
    MergeConflict(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("I/O: {0}")]
    Io(String),
}

impl Error {
    /// True when the operation was refused because of a resource cap rather than invalid input.
    pub fn is_cap_refusal(&self) -> bool {
        matches!(self, Error::TooLarge { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
