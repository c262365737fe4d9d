use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("game has no players")]
    NoPlayers,
    #[error("game has no nodes")]
    Empty,
    #[error("more than one root node")]
    MultipleRoots,
    #[error("some nodes are not reachable from the root")]
    Disconnected,
    #[error("duplicate node {0}")]
    DuplicateNode(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("unknown player {0}")]
    UnknownPlayer(usize),
    #[error("node with no actions")]
    NoActions,
    #[error("duplicate action label {0}")]
    DuplicateAction(String),
    #[error("node {node} has no action {action}")]
    UnknownAction { node: String, action: String },
    #[error("node {node} already has a child via {action}")]
    DuplicateChild { node: String, action: String },
    #[error("node {node} has no child via {action}")]
    MissingChild { node: String, action: String },
    #[error("game cannot be made timeable")]
    Untimeable,
    #[error("invalid game: {0}")]
    Invalid(String),
    #[error("game too large: {0} nodes")]
    TooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown notion {0}")]
    UnknownNotion(String),
    #[error("unknown infoset {0}")]
    UnknownInfoset(String),
    #[error("unknown message {message} at infoset {infoset}")]
    UnknownMessage { infoset: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("malformed configuration: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("perfect recall violated for agent {0}")]
    PerfectRecall(String),
    #[error("strategy enumeration budget exceeded for player {0}")]
    BudgetExceeded(usize),
    #[error("linear program: {0}")]
    Lp(String),
}
