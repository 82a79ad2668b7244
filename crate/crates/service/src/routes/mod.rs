pub mod annotate;
pub mod crud;
pub mod documents;
pub mod layout;
