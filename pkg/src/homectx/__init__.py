"""Smart-home context engine: RDF-modeled context, sensor dedup, a SPARQL
subset, and priority-ordered appliance reasoning."""

__version__ = "0.1.0"
