# tdlab core: exact oracles, linear evaluators and cooperative approximation
