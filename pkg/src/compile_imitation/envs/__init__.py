# environments: grid world, reacher, adapter registry
