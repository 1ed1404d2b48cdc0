"""ragforge: retrieval-augmented generation engine and benchmark harness
for study-program question answering.

The package is organized by pipeline stage: ``corpus`` (data loading),
``embed`` (providers + cosine), ``index`` (chunking, BM25, vector store),
``retrieve`` (retriever family and fusion), ``generate`` (prompts and chat
endpoints), ``evaluate`` (metrics, judge, confusion matrix), ``runner``
(experiments, grids, reports), and ``cli``.
"""

__version__ = "0.1.0"
