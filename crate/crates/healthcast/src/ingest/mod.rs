//! Repository selection, activity mining and monthly aggregation.

mod aggregate;
mod events;
mod filters;
mod mine;

pub use aggregate::aggregate_monthly;
pub use events::{CommitEvent, EventStream, IssueAction, IssueEvent, PrAction, PrEvent, Timestamp};
pub use filters::{
    created_window, is_relevant_url, passes_filters, FilterDecision, KeywordDictionary, RepoMeta,
    IRRELEVANT_WORDS,
};
pub use mine::{
    derive_meta, parse_git_log, HttpResponse, MineError, MinedRepo, Miner, RepoId, ResponseCache,
    Token, Transport, UreqTransport, DEFAULT_API_BASE, DEFAULT_CLONE_BASE, PAGE_SIZE, TOKEN_ENV,
};
