pub mod toy_mdp;
