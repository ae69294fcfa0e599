# Package marker - enables direct imports from submodules