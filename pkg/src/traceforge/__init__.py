"""traceforge: recover missing trace links between commits and issues.

A toolkit that learns, from process signals and textual similarity, which
issue a commit belongs to: top-k recommendation at commit time, automated
high-precision link augmentation, and tooling for blind human review of
proposed links.
"""

__version__ = "0.1.0"
