"""Personal-context conversational memory engine.

Captures per-tick real-time context, distills it into indexed historical
context and evolving user profiles, and drives a two-agent personalized
response loop — all against pluggable model providers with deterministic
reference implementations.
"""

__version__ = "0.1.0"
