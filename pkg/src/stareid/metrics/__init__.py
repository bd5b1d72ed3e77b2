from stareid.metrics.retrieval import RetrievalSet
from stareid.metrics.retrieval import MetricsReport
from stareid.metrics.retrieval import pairwise_distances
from stareid.metrics.retrieval import cmc
from stareid.metrics.retrieval import mean_ap
from stareid.metrics.retrieval import evaluate_retrieval
from stareid.metrics.embeddings_file import write_embeddings
from stareid.metrics.embeddings_file import read_embeddings
