use thiserror::Error;

/// Line and column (both 1-based, column in characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl std::fmt::Display for Position {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StepError {
    #[error("lexical error at {pos}: {message}")]
    Lexical { pos: Position, message: String },
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Position, message: String },
    #[error("missing or malformed header: {0}")]
    MissingHeader(String),
    #[error("duplicate instance #{id} at {pos}")]
    DuplicateInstance { id: u64, pos: Position },
    #[error("unresolved reference #{target} in instance #{from} at {pos}")]
    UnresolvedReference { target: u64, from: u64, pos: Position },
    #[error("malformed {entity} instance #{id}: {message}")]
    Malformed { entity: String, id: u64, message: String },
    #[error("cyclic assembly through products {0:?}")]
    CyclicAssembly(Vec<u64>),
    #[error("unknown product #{0}")]
    UnknownProduct(u64),
    #[error("transform is not rigid: {0}")]
    NonRigid(String),
}
